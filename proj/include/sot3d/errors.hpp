#pragma once

#include <stdexcept>
#include <string>

namespace sot3d {

// Malformed on-disk data: bad schemas, corrupt binary payloads, wrong arity.
// CLI maps this to exit code 2.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Well-formed files that violate the evaluation protocol (missing frames,
// duplicate predictions, unmatched sequence ids). CLI maps this to exit code 1.
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf detected in a numeric pipeline that guarantees finite values.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Tensor shape mismatch; message names both offending shapes.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace sot3d
