#pragma once

#include <stdexcept>
#include <string>

namespace htlab {

// Base class for every failure this library raises on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor or layer geometry that does not compose.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(what) {}
};

// Invalid or inconsistent configuration (JSON or programmatic).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// A bit-level operation left the representable range (e.g. the exponent
// field would leave [1, 254]).
class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what) : Error(what) {}
};

// An attack stage could not establish (or verify) the required gap between
// clean and backdoor activations. `gap` holds the measured value when one
// exists; it is 0 when the failure is structural (no candidates, no leverage).
class SeparationError : public Error {
 public:
  SeparationError(const std::string& what, double gap_in = 0.0)
      : Error(what), gap(gap_in) {}
  double gap;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(what) {}
};

// File I/O or on-disk format problems (missing file, bad magic, checksum).
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace htlab
