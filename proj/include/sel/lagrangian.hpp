#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sel/eulerian.hpp"
#include "sel/qwiener.hpp"
#include "sel/sde.hpp"
#include "sel/spectral_field.hpp"

namespace sel {

/// Flow map Phi and carried velocity eta = u o Phi sampled at labelled
/// particles. Velocities live in their own slot: noise kicks change eta and
/// never the positions.
struct ParticleEnsemble {
  std::vector<Vec2> labels;
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
  double t = 0.0;
  /// Side of the uniform label grid, 0 for user-supplied labels.
  int per_side = 0;

  std::size_t size() const { return labels.size(); }
};

/// Labels on the uniform per_side x per_side grid, Phi = id, eta = u0(labels).
ParticleEnsemble make_particles(const SpectralVelocityField& u0, int per_side);
ParticleEnsemble make_particles(const SpectralVelocityField& u0, std::vector<Vec2> labels);

using VelocityProvider = std::function<SpectralVelocityField(double t)>;

/// Explicit midpoint step of dPhi = u(t, Phi) dt; velocities untouched.
ParticleEnsemble advect(const ParticleEnsemble& particles, const VelocityProvider& u, double dt);

/// (I - Pi)[(u . grad) u] = -grad p: the material acceleration of an
/// unforced Euler flow.
SpectralVelocityField material_acceleration(const SpectralVelocityField& u);

/// Du/Dt of the truncated flow at arbitrary points:
///   (u . grad) u - P_N Pi[(u . grad) u],
/// the product taken pointwise. Agrees with material_acceleration(u) when
/// (u . grad) u has no modes beyond the lattice, e.g. for Taylor-Green.
class AccelerationEvaluator {
 public:
  explicit AccelerationEvaluator(const SpectralVelocityField& u);
  std::vector<Vec2> operator()(std::span<const Vec2> points) const;

 private:
  SpectralVelocityField u_, dx_, dy_, projected_;
};
std::vector<Vec2> material_acceleration_at(const SpectralVelocityField& u, std::span<const Vec2> points);

struct SprayResult {
  std::vector<Vec2> accelerations;
  /// max_i |eta_i - u(Phi_i)| / max_i |u(Phi_i)| (absolute when u vanishes
  /// at every particle).
  double consistency_error = 0.0;
  bool consistent = true;
};

/// Velocity component of the geodesic spray at each particle; reports (does
/// not throw) when the carried velocities disagree with u o Phi beyond tol.
SprayResult spray(const ParticleEnsemble& particles, const SpectralVelocityField& u, double tol = 1e-3);

/// W(Phi_i) for the increment field: the vertically lifted noise kick.
std::vector<Vec2> lagrangian_noise(const ParticleEnsemble& particles, const NoiseIncrement& increment);

/// The pair (Phi, eta) stacked as [Phi_x, Phi_y, eta_x, eta_y] per particle,
/// with drift (eta, spray of the frozen field u) and diffusion (0, W o Phi).
sde::SdeProblem make_stacked_lagrangian_problem(const ParticleEnsemble& particles, const QWienerSpec& spec,
                                                const SpectralVelocityField& u);

/// Signed area of each label quadrilateral under Phi relative to its
/// initial area; needs labels on a uniform grid.
struct JacobianRange {
  double min = 1.0;
  double max = 1.0;
};
JacobianRange jacobian_range(const ParticleEnsemble& particles);

enum class NoiseEvaluation { left_point, midpoint };

/// Per-particle norm of
///   u_T(Phi_T) - u_0(Phi_0) - sum_j (A_j(Phi_j) + A_{j+1}(Phi_{j+1})) dt / 2 - sum_j dW_j(Phi_j)
/// with A = material_acceleration_at(u, .). fields and positions hold steps
/// 0..n, increments steps 0..n-1.
std::vector<double> equivalence_residual(std::span<const SpectralVelocityField> fields,
                                         std::span<const std::vector<Vec2>> positions,
                                         std::span<const SpectralVelocityField> increments, double dt,
                                         NoiseEvaluation evaluation = NoiseEvaluation::left_point);
double max_equivalence_residual(std::span<const SpectralVelocityField> fields,
                                std::span<const std::vector<Vec2>> positions,
                                std::span<const SpectralVelocityField> increments, double dt,
                                NoiseEvaluation evaluation = NoiseEvaluation::left_point);

struct LagrangianRunConfig {
  sde::TimeGrid grid;
  sde::Scheme eulerian_scheme = sde::Scheme::heun;
  int particles_per_side = 32;
  int record_stride = 1;
  double consistency_tolerance = 1e-3;
  /// Localisation of the co-evolving Eulerian field.
  EulerianSetup setup;
  /// Drop the velocity kicks (positions must be unaffected).
  bool suppress_kicks = false;
  /// Keep every step's field, positions and increment for equivalence_residual.
  bool keep_paths = false;
};

struct LagrangianStepReport {
  int step = 0;
  double t = 0.0;
  /// max_i |eta_i - u(Phi_i)|
  double residual = 0.0;
  double consistency_error = 0.0;
  JacobianRange jacobian;
  double divergence_residual = 0.0;
};

struct LagrangianRun {
  std::vector<ParticleEnsemble> snapshots;
  std::vector<LagrangianStepReport> reports;
  ParticleEnsemble final_particles;
  sde::PathStatus status = sde::PathStatus::completed;
  std::optional<double> exit_time;
  double max_divergence_residual = 0.0;
  double max_consistency_error = 0.0;
  int consistency_warnings = 0;

  std::vector<SpectralVelocityField> fields;
  std::vector<std::vector<Vec2>> positions;
  std::vector<SpectralVelocityField> increments;
};

/// Particles driven along the co-evolving Eulerian solution: u advances by
/// the Eulerian scheme with the shared increments, Phi by the midpoint rule
/// on u interpolated linearly in time, eta by a trapezoidal spray plus
/// left-point noise kicks.
LagrangianRun run_lagrangian(const SpectralVelocityField& u0, const QWienerSpec& spec,
                             const LagrangianRunConfig& config, std::span<const sde::NoiseVector> increments);
LagrangianRun run_lagrangian(const SpectralVelocityField& u0, const QWienerSpec& spec,
                             const LagrangianRunConfig& config, RandomStream& stream);

struct EquivalenceStudy {
  double horizon = 0.5;
  int coarsest_steps = 16;
  int halvings = 4;
  int paths = 4;
  int particles_per_side = 16;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct EquivalenceStudyResult {
  std::vector<double> dts;
  /// Mean over paths of the maximal particle residual at the horizon.
  std::vector<double> residuals;
  double slope = 0.0;
  double max_divergence_residual = 0.0;
};

/// Residual at the horizon for coupled noise on dt, dt/2, ..., dt/2^halvings.
EquivalenceStudyResult equivalence_refinement(const SpectralVelocityField& u0, const QWienerSpec& spec,
                                              const EquivalenceStudy& study);

}  // namespace sel
