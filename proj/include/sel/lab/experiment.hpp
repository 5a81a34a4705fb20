#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sel/lab/config.hpp"
#include "sel/qwiener.hpp"
#include "sel/random.hpp"
#include "sel/spectral_field.hpp"

namespace sel::lab {

/// One embedded acceptance check: passes iff lower <= value <= upper.
/// Non-gating checks are monitors and never change the exit status.
struct Check {
  std::string name;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool passed = false;
  bool gating = true;
};

Check make_check(std::string name, double value, double lower, double upper, bool gating = true);

struct DataFile {
  std::string name;
  std::string body;
};

/// A random stream a trajectory drew from, as (index, purpose) -> key.
struct StreamRecord {
  std::uint64_t index = 0;
  StreamPurpose purpose = StreamPurpose::noise;
  std::uint64_t key = 0;
};

const char* to_string(StreamPurpose p);

struct ExperimentResult {
  std::vector<DataFile> files;
  std::vector<Check> checks;
  std::vector<StreamRecord> streams;
  std::vector<std::string> notes;

  bool passed() const;
};

SpectralVelocityField initial_field(const ExperimentConfig& config);
QWienerSpec noise_spec(const ExperimentConfig& config);

/// Runs the experiment named by config.kind. Output does not depend on
/// `threads`. Numeric aborts are rethrown as std::runtime_error naming the
/// trajectory and step.
ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads = 1);

}  // namespace sel::lab
