#pragma once

#include <stdexcept>
#include <string>

namespace movdet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plane or frame dimensions are zero or do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class SingularTransformError : public Error {
 public:
  using Error::Error;
};

class InsufficientPointsError : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// No inlier correspondences to average a background displacement over.
class UndefinedMotionError : public Error {
 public:
  using Error::Error;
};

/// Base for problems with user-supplied data: missing files, bad formats,
/// malformed configuration. The CLI maps these to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class ConfigError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, int line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace movdet
