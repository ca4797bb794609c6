/* C interface to the grasp particle filter. All handles are opaque; every
 * call returns a gpf_status and leaves a message for gpf_last_error() on
 * failure. The message is per thread. */
#ifndef GRASPPF_H
#define GRASPPF_H

#if defined(GRASPPF_BUILDING) && defined(__GNUC__)
#define GPF_API __attribute__((visibility("default")))
#else
#define GPF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  GPF_OK = 0,
  GPF_ERR_PARSE = 1,     /* malformed scene or config */
  GPF_ERR_INVALID = 2,   /* argument out of range, unknown key, bad mode */
  GPF_ERR_IO = 3,        /* output could not be written */
  GPF_ERR_TIMEOUT = 4,   /* episode hit max_steps */
  GPF_ERR_RUNTIME = 5    /* anything else raised by the core */
} gpf_status;

typedef struct gpf_scene gpf_scene;
typedef struct gpf_config gpf_config;

GPF_API const char* gpf_last_error(void);
GPF_API const char* gpf_version(void);
/* "trace", "debug", "info", "warn", "error" or "off"; logs go to stderr. */
GPF_API gpf_status gpf_set_log_level(const char* level);

GPF_API gpf_status gpf_scene_load(const char* path, gpf_scene** out);
GPF_API gpf_status gpf_scene_parse(const char* json_text, gpf_scene** out);
GPF_API void gpf_scene_free(gpf_scene* scene);
GPF_API int gpf_scene_object_count(const gpf_scene* scene);

GPF_API gpf_status gpf_config_new(gpf_config** out);
GPF_API void gpf_config_free(gpf_config* cfg);
/* Keys mirror the CLI's --params; "seed", "mode" and "jobs" are accepted too. */
GPF_API gpf_status gpf_config_set(gpf_config* cfg, const char* key, const char* value);

/* Writes depth.pgm (16-bit mm) and object_id.pgm into out_dir.
 * object_pixels receives the number of pixels that see an object (may be NULL). */
GPF_API gpf_status gpf_render(const gpf_scene* scene, const gpf_config* cfg, const char* out_dir, long* object_pixels);

/* Writes the six label channels (q_level1..3, object_mask, free_narrow,
 * free_wide) for one grasp direction as 8-bit PGMs into out_dir. */
GPF_API gpf_status gpf_label(const gpf_scene* scene, const gpf_config* cfg, double alpha, double beta, double gamma,
                     double depth, const char* out_dir);

typedef struct {
  int success;
  int cleared;
  int steps;
  int executed_object_id;
} gpf_episode_result;

/* Runs one episode. The trace goes to trace_path as JSON lines and the result
 * to out, each when non-NULL.
 * Returns GPF_ERR_TIMEOUT, with the trace still written, on a timeout. */
GPF_API gpf_status gpf_run(const gpf_scene* scene, const gpf_config* cfg, const char* trace_path, gpf_episode_result* out);

/* Runs `episodes` seeds (seed, seed+1, ...) of every bench mode and writes
 * summary.csv, summary.txt and episodes.jsonl into out_dir. */
GPF_API gpf_status gpf_bench(const gpf_scene* scene, const gpf_config* cfg, int episodes, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
