#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sel/random.hpp"

namespace sel::sde {

using State = Eigen::VectorXd;
/// Increment of the driving noise in the eigen-coordinates of Q.
using NoiseVector = Eigen::VectorXd;

using DriftFn = std::function<State(double t, const State& x)>;
/// The action x, dw -> sigma(x) dw of the diffusion coefficient.
using DiffusionFn = std::function<State(const State& x, const NoiseVector& dw)>;
using NormFn = std::function<double(const State&)>;

/// Closed ball {x : norm(x - center) <= radius}; an empty center means the
/// origin and an empty norm the Euclidean one.
struct LocalizationDomain {
  State center;
  double radius = std::numeric_limits<double>::infinity();
  NormFn norm;

  double distance(const State& x) const;
  bool contains(const State& x) const { return distance(x) <= radius; }
  bool contains_strictly(const State& x) const { return distance(x) < radius; }
};

/// dX = b(t, X) dt + sigma(X) dW (read as Ito or Stratonovich depending on
/// the scheme), W with covariance diag(noise_variances) in noise coordinates.
struct SdeProblem {
  DriftFn drift;
  DiffusionFn diffusion;
  std::vector<double> noise_variances;
  LocalizationDomain domain;
  State initial;

  Eigen::Index state_dim() const { return initial.size(); }
  std::size_t noise_dim() const { return noise_variances.size(); }
};

enum class Scheme { euler_maruyama, heun };

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

struct TimeGrid {
  double start = 0.0;
  double dt = 0.0;
  int steps = 0;

  static TimeGrid uniform(double horizon, int steps);
  double time(int n) const { return start + n * dt; }
  double end() const { return time(steps); }
};

/// x + b(t, x) dt + sigma(x) dw
State step_euler_maruyama(const SdeProblem& p, double t, const State& x, const NoiseVector& dw, double dt);

/// Stochastic Heun: predictor x~ = x + b dt + sigma(x) dw, corrector
/// x + (b(t, x) + b(t + dt, x~)) dt / 2 + (sigma(x) + sigma(x~)) dw / 2.
/// Consistent with the Stratonovich reading of the equation.
State step_heun_stratonovich(const SdeProblem& p, double t, const State& x, const NoiseVector& dw,
                             double dt);

State step(const SdeProblem& p, Scheme scheme, double t, const State& x, const NoiseVector& dw, double dt);

/// (1/2) sum_k lambda_k D sigma(x)[sigma(x) e_k] e_k by central differences
/// along sigma(x) e_k. Adding it to a Stratonovich drift gives the Ito drift.
State stratonovich_correction(const SdeProblem& p, const State& x);
State stratonovich_correction(const SdeProblem& p, const State& x, double fd_step);

/// Same noise, drift replaced by b + stratonovich_correction.
SdeProblem ito_form(const SdeProblem& stratonovich);

enum class PathStatus { completed, exited, aborted };

struct PathResult {
  std::vector<double> times;
  std::vector<State> states;
  PathStatus status = PathStatus::completed;
  /// First grid time at which the state is outside the domain.
  std::optional<double> exit_time;
  std::optional<int> exit_step;
  int steps_taken = 0;
  State final_state;
  std::string diagnostic;

  bool exited() const { return status == PathStatus::exited; }
};

struct PathOptions {
  /// Record every n-th state (the last reached state is always recorded).
  int record_stride = 1;
  bool record_states = true;
  /// Called after every accepted state; dw is null at step 0 and otherwise
  /// the increment that produced the state.
  std::function<void(int step, double t, const State& x, const NoiseVector* dw)> observer;
};

std::vector<NoiseVector> sample_increments(const SdeProblem& p, const TimeGrid& grid, RandomStream& stream);

/// Sums consecutive blocks of `factor` increments (coupled coarse noise).
std::vector<NoiseVector> coarsen_increments(std::span<const NoiseVector> fine, int factor);

/// Integrates until the end of the grid or the first grid time the state
/// leaves the closed localization ball. Throws std::invalid_argument if the
/// initial state is not strictly inside the domain.
PathResult solve_path(const SdeProblem& p, Scheme scheme, const TimeGrid& grid, RandomStream& stream,
                      const PathOptions& options = {});
PathResult solve_path_with_increments(const SdeProblem& p, Scheme scheme, const TimeGrid& grid,
                                      std::span<const NoiseVector> increments,
                                      const PathOptions& options = {});

/// Least-squares slope of log(error) against log(dt).
double fit_log_slope(std::span<const double> dts, std::span<const double> errors);

struct ConvergenceStudy {
  Scheme scheme = Scheme::euler_maruyama;
  double horizon = 1.0;
  int coarsest_steps = 8;
  /// Number of step sizes compared; must be at least 3.
  int levels = 4;
  int paths = 100;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// Exact terminal state from (initial state, total noise W_T). When
  /// absent, a grid reference_halvings finer than the finest level is the
  /// reference; one halving biases the fitted order upwards.
  std::function<State(const State& x0, const NoiseVector& w_total)> exact;
  int reference_halvings = 3;
};

struct ConvergenceResult {
  std::vector<double> dts;
  /// Root-mean-square terminal error per step size.
  std::vector<double> errors;
  double order = 0.0;
};

/// Strong error at the horizon for step sizes coarsest_dt / 2^l with
/// coupled noise; throws std::domain_error on zero errors.
ConvergenceResult strong_convergence_order(const SdeProblem& p, const ConvergenceStudy& study);

}  // namespace sel::sde
