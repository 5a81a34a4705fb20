#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sel/sde.hpp"

namespace sel::lab {

enum class ExperimentKind { simulate_euler, simulate_averaged, equivalence, convergence, isometry, energy_growth };
enum class InitialKind { taylor_green, single_mode, random, zero };
enum class Benchmark { stratonovich_scalar, additive_linear, euler_additive };

const char* to_string(ExperimentKind k);
const char* to_string(InitialKind k);
const char* to_string(Benchmark b);
/// Throws std::invalid_argument on unknown names.
ExperimentKind kind_from_string(std::string_view name);

/// Raised for anything wrong with a config; key() names the offending key
/// (empty for syntax errors that precede any key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what) : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::simulate_euler;
  bool kind_set = false;

  int resolution = 16;
  double dt = 0.0;
  double t_end = 0.0;
  sde::Scheme scheme = sde::Scheme::heun;

  double noise_gamma = 2.0;
  double noise_amplitude = 0.0;
  int noise_s_prime = 0;

  double alpha = 0.0;

  InitialKind initial = InitialKind::taylor_green;
  int mode_kx = 1;
  int mode_ky = 0;
  double initial_amplitude = 1.0;
  std::uint64_t initial_seed = 0;
  double initial_slope = 2.0;

  std::uint64_t seed = 0;
  int ensemble = 1;
  double radius_factor = 10.0;
  double sobolev_index = 3.0;
  int output_stride = 1;

  std::string output_dir;

  int particles_per_side = 32;
  int halvings = 4;
  Benchmark benchmark = Benchmark::stratonovich_scalar;

  /// Number of steps on the configured grid; t_end / dt must be (close to)
  /// an integer.
  int steps() const;
};

/// Flat "key = value" text, '#' starts a comment. Unknown keys, duplicates,
/// malformed values and missing required keys (time.dt, time.t_end) throw
/// ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key, in a fixed order, doubles with 17 significant digits:
/// parse_config(serialize(c)) reproduces c exactly.
std::string serialize(const ExperimentConfig& config);

}  // namespace sel::lab
