#pragma once

#include <stdexcept>
#include <string>

namespace dbsloc {

/// Argument outside an operation's domain (bad dims, spacing, parameter range).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data that cannot be processed (e.g. an all-NaN heatmap).
class InvalidData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Weight manifest or payload that does not match the network layout.
class InvalidModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stage-1 mask with no foreground voxels.
class EmptyComponent : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Both sides of the two-stage pipeline failed.
class PipelineFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Phantom geometry that cannot be realized.
class SpecInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Results table lacking required columns.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure inside one Monte Carlo pass; carries the sample index.
class SamplingError : public std::runtime_error {
 public:
  SamplingError(int sample_index, const std::string& what)
      : std::runtime_error("sample " + std::to_string(sample_index) + ": " + what),
        sample_index_(sample_index) {}
  int sample_index() const noexcept { return sample_index_; }

 private:
  int sample_index_;
};

}  // namespace dbsloc
