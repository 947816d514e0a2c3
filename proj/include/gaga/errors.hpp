#pragma once

#include <stdexcept>
#include <string>

namespace gaga {

// Invalid configuration (bad ranges, unknown keys, nonpositive scales).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

// Caller broke an operation contract (shape mismatch and the like).
struct ContractError : std::invalid_argument {
  explicit ContractError(const std::string& m) : std::invalid_argument(m) {}
};

// A geometric transform would leave the frame.
struct TransformError : std::runtime_error {
  explicit TransformError(const std::string& m) : std::runtime_error(m) {}
};

// Malformed translation request (wrong-domain exemplar, missing inputs).
struct RequestError : std::runtime_error {
  explicit RequestError(const std::string& m) : std::runtime_error(m) {}
};

// Training state is not ready for the requested step.
struct StateError : std::runtime_error {
  explicit StateError(const std::string& m) : std::runtime_error(m) {}
};

// Non-finite loss; carries the diagnostic dump location.
struct TrainingAbort : std::runtime_error {
  explicit TrainingAbort(const std::string& m) : std::runtime_error(m) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace gaga
