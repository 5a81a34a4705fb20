#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sel/qwiener.hpp"
#include "sel/sde.hpp"
#include "sel/spectral_field.hpp"

namespace sel {

/// Averaged Euler-alpha regularisation length; alpha = 0 is plain Euler.
struct AlphaModelParams {
  double alpha = 0.0;
};

struct EulerState {
  SpectralVelocityField u{0};
  double t = 0.0;
};

/// Deterministic forcing f(t); applied through the Leray projection.
using ForcingFn = std::function<SpectralVelocityField(double t)>;

/// -Pi[(u . grad) u] + Pi f
SpectralVelocityField euler_drift(const SpectralVelocityField& u,
                                  const std::optional<SpectralVelocityField>& forcing = std::nullopt);

/// -(id - a^2 Delta)^{-1} Pi[(u . grad) m + a^2 (grad u)^T Delta u] with
/// m = (id - a^2 Delta) u. Throws for alpha < 0.
SpectralVelocityField averaged_drift(const SpectralVelocityField& u, AlphaModelParams params,
                                     const std::optional<SpectralVelocityField>& forcing = std::nullopt);

/// The map W -> (id - a^2 Delta)^{-1} W applied to the noise.
NoiseOperator noise_operator_eulerian(AlphaModelParams params);

/// Real coordinates of a field: Re/Im of every x coefficient, then of every
/// y coefficient.
sde::State pack(const SpectralVelocityField& u);
SpectralVelocityField unpack(const sde::State& x, int resolution);

enum class EulerModel { euler, averaged };

struct EulerianSetup {
  EulerModel model = EulerModel::euler;
  AlphaModelParams alpha;
  /// Sobolev index of the localisation ball.
  double sobolev_index = 3.0;
  /// Ball radius; infinity disables localisation.
  double radius = std::numeric_limits<double>::infinity();
  ForcingFn forcing;
};

/// The velocity equation as an SdeProblem on packed coefficients, with noise
/// coordinates given by the eigenbasis of `spec`.
sde::SdeProblem make_eulerian_problem(const SpectralVelocityField& u0, const QWienerSpec& spec,
                                      const EulerianSetup& setup);

/// radius_factor * ||u0||_{H^s}, or infinity when u0 = 0.
double localization_radius(const SpectralVelocityField& u0, double sobolev_index, double radius_factor);

struct EulerDiagnostics {
  int step = 0;
  double t = 0.0;
  double energy = 0.0;
  double enstrophy = 0.0;
  double sobolev_norm = 0.0;
  double divergence_residual = 0.0;
};

struct EulerianRunConfig {
  sde::TimeGrid grid;
  sde::Scheme scheme = sde::Scheme::heun;
  EulerianSetup setup;
  int record_stride = 1;
  bool keep_fields = false;
};

struct EulerianRun {
  std::vector<EulerDiagnostics> diagnostics;
  /// Recorded states, only when keep_fields is set.
  std::vector<EulerState> states;
  EulerState final_state;
  sde::PathStatus status = sde::PathStatus::completed;
  std::optional<double> exit_time;
  std::string diagnostic;
  double max_divergence_residual = 0.0;
};

EulerianRun run_eulerian(const SpectralVelocityField& u0, const QWienerSpec& spec,
                         const EulerianRunConfig& config, RandomStream& stream);
EulerianRun run_eulerian(const SpectralVelocityField& u0, const QWienerSpec& spec,
                         const EulerianRunConfig& config, std::span<const sde::NoiseVector> increments);

}  // namespace sel
