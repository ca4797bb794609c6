#pragma once

#include <stdexcept>
#include <string>

namespace grasppf {

// Every error raised by the core derives from Error; the C layer maps the
// concrete type onto a status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

class UnknownObject : public Error {
 public:
  explicit UnknownObject(int id)
      : Error("unknown object id " + std::to_string(id)), id_(id) {}
  int id() const { return id_; }

 private:
  int id_;
};

class GimbalLock : public Error {
 public:
  using Error::Error;
};

class MissPixel : public Error {
 public:
  using Error::Error;
};

class FrameMismatch : public Error {
 public:
  using Error::Error;
};

/// No pixel clears the lowest quality threshold; callers treat the scene as cleared.
class NoCandidates : public Error {
 public:
  using Error::Error;
};

class Degenerate : public Error {
 public:
  using Error::Error;
};

class Timeout : public Error {
 public:
  using Error::Error;
};

}  // namespace grasppf
