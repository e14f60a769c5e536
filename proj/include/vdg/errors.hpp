#pragma once

#include <stdexcept>
#include <string>

namespace vdg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FrameError : public Error {
 public:
  using Error::Error;
};

class InvalidTransform : public Error {
 public:
  using Error::Error;
};

class DegenerateMotion : public Error {
 public:
  using Error::Error;
};

class TooFewMeasurements : public Error {
 public:
  using Error::Error;
};

class CollinearPoints : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class MeasurementFailed : public Error {
 public:
  using Error::Error;
};

/// Raised while loading configuration files; the message names the offending field.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace vdg
