#pragma once

#include <stdexcept>
#include <string>

namespace iat {

/// Base class for every error raised by the codec libraries.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents or channel counts that do not fit an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced by an op, or a division by a near-zero element.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Misuse of the autodiff graph (non-scalar loss, consumed graph, ...).
class GraphError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration file or out-of-range setting.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File-system or image-decoding failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace iat
