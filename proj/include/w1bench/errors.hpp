#pragma once

#include <stdexcept>
#include <string>

namespace w1bench {

// Recoverable geometric signals. Samplers resample on these and the
// benchmark map falls back to the identity; they are not fatal.
struct TieError : std::runtime_error {
  explicit TieError(const std::string& msg) : std::runtime_error(msg) {}
};

struct AtCenterError : std::runtime_error {
  explicit AtCenterError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateRayError : std::runtime_error {
  explicit DegenerateRayError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConstructionError : std::runtime_error {
  explicit ConstructionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Funnel parameters violating ||a_i - a_j|| != |b_i - b_j|.
struct NonDegeneracyError : ConstructionError {
  explicit NonDegeneracyError(const std::string& msg) : ConstructionError(msg) {}
};

struct LipschitzViolationError : std::runtime_error {
  explicit LipschitzViolationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct OutOfBoxError : std::runtime_error {
  explicit OutOfBoxError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SamplerError : std::runtime_error {
  explicit SamplerError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SchemaVersionError : std::runtime_error {
  explicit SchemaVersionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ZeroFieldError : std::runtime_error {
  explicit ZeroFieldError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct AssignmentInfeasible : std::runtime_error {
  explicit AssignmentInfeasible(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace w1bench
