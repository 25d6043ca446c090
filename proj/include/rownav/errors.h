#ifndef ROWNAV_ERRORS_H_
#define ROWNAV_ERRORS_H_

#include <stdexcept>
#include <string>

namespace rownav {

// Base for every fatal error raised by the library. Non-fatal outcomes
// (a point that is not visible, a frame without a path) are returned as
// std::optional or status enums instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateViewError : public Error {
 public:
  using Error::Error;
};

class EmptyPathError : public Error {
 public:
  using Error::Error;
};

class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

class ClockSkewError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace rownav

#endif  // ROWNAV_ERRORS_H_
