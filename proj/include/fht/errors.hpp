#pragma once

#include <stdexcept>
#include <string>

namespace fht {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor extents do not line up (contraction, kron, core wiring).
class ShapeError : public Error {
  public:
    using Error::Error;
};

/// A coordinate or assignment lies outside the basis interval.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Malformed or truncated file payload. Carries the byte offset.
class ParseError : public Error {
  public:
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " (offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

/// A trajectory produced a non-finite state or left the guard box.
class SimulationDivergedError : public Error {
  public:
    using Error::Error;
};

/// A univariate marginal integrated to <= 0 during autoregressive sampling.
class SamplingFailureError : public Error {
  public:
    using Error::Error;
};

/// The normalizing denominator was <= 0 at a query point.
class DegeneratePointError : public Error {
  public:
    using Error::Error;
};

/// A sketched cross-moment matrix was identically zero at some tree node.
class DegenerateNodeError : public Error {
  public:
    using Error::Error;
};

/// Too many samples violated the domain assumptions during estimation.
class DataQualityError : public Error {
  public:
    using Error::Error;
};

/// Bad experiment configuration (unknown keys, invalid values).
class ConfigError : public Error {
  public:
    using Error::Error;
};

}  // namespace fht
