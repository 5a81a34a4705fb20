#include "sel/eulerian.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <memory>
#include <stdexcept>

namespace sel {

SpectralVelocityField euler_drift(const SpectralVelocityField& u,
                                  const std::optional<SpectralVelocityField>& forcing) {
  auto d = (-1.0) * leray_project(advection_term(u));
  if (forcing) d += leray_project(*forcing);
  return d;
}

SpectralVelocityField averaged_drift(const SpectralVelocityField& u, AlphaModelParams params,
                                     const std::optional<SpectralVelocityField>& forcing) {
  const double alpha = params.alpha;
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");
  const auto m = helmholtz_forward(u, alpha);
  auto rhs = directional_derivative(u, m);
  if (alpha > 0.0) rhs += (alpha * alpha) * transpose_gradient_product(u, laplacian(u));
  // Pi and the Helmholtz inverse are both Fourier multipliers and commute.
  auto d = (-1.0) * helmholtz_inverse(leray_project(rhs), alpha);
  if (forcing) d += helmholtz_inverse(leray_project(*forcing), alpha);
  return d;
}

NoiseOperator noise_operator_eulerian(AlphaModelParams params) {
  if (!(params.alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");
  return [alpha = params.alpha](const SpectralVelocityField& w) { return helmholtz_inverse(w, alpha); };
}

sde::State pack(const SpectralVelocityField& u) {
  const auto n = static_cast<Eigen::Index>(u.size());
  sde::State x(4 * n);
  std::copy_n(reinterpret_cast<const double*>(u.x_coeffs().data()), 2 * n, x.data());
  std::copy_n(reinterpret_cast<const double*>(u.y_coeffs().data()), 2 * n, x.data() + 2 * n);
  return x;
}

SpectralVelocityField unpack(const sde::State& x, int resolution) {
  SpectralVelocityField u(resolution);
  const auto n = static_cast<Eigen::Index>(u.size());
  if (x.size() != 4 * n) throw std::invalid_argument("packed state size does not match resolution");
  std::copy_n(x.data(), 2 * n, reinterpret_cast<double*>(u.x_coeffs().data()));
  std::copy_n(x.data() + 2 * n, 2 * n, reinterpret_cast<double*>(u.y_coeffs().data()));
  return u;
}

double localization_radius(const SpectralVelocityField& u0, double sobolev_index, double radius_factor) {
  const double r = radius_factor * sobolev_norm(u0, sobolev_index);
  return r > 0.0 ? r : std::numeric_limits<double>::infinity();
}

sde::SdeProblem make_eulerian_problem(const SpectralVelocityField& u0, const QWienerSpec& spec,
                                      const EulerianSetup& setup) {
  require_same_resolution(u0.lattice(), SpectralLattice(spec.resolution()));
  if (!(setup.alpha.alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");
  const int n = u0.resolution();
  const auto spec_ptr = std::make_shared<const QWienerSpec>(spec);

  sde::SdeProblem p;
  p.initial = pack(u0);
  p.noise_variances = spec.eigenvalues();
  p.drift = [n, setup](double t, const sde::State& x) {
    const auto u = unpack(x, n);
    std::optional<SpectralVelocityField> f;
    if (setup.forcing) f = setup.forcing(t);
    return pack(setup.model == EulerModel::averaged ? averaged_drift(u, setup.alpha, f) : euler_drift(u, f));
  };
  p.diffusion = [spec_ptr, setup](const sde::State&, const sde::NoiseVector& dw) {
    auto w = spec_ptr->field_from_coordinates(std::span<const double>(dw.data(), static_cast<std::size_t>(dw.size())));
    if (setup.model == EulerModel::averaged) w = helmholtz_inverse(w, setup.alpha.alpha);
    return pack(w);
  };

  // H^s weights on the packed real coordinates
  const SpectralLattice lattice(n);
  auto weights = std::make_shared<Eigen::VectorXd>(p.initial.size());
  const auto l = static_cast<Eigen::Index>(lattice.size());
  for (Eigen::Index i = 0; i < l; ++i) {
    const double w = std::pow(1.0 + lattice.wavevector(static_cast<std::size_t>(i)).norm2(), setup.sobolev_index);
    (*weights)[2 * i] = (*weights)[2 * i + 1] = w;
    (*weights)[2 * l + 2 * i] = (*weights)[2 * l + 2 * i + 1] = w;
  }
  p.domain.radius = setup.radius;
  p.domain.norm = [weights](const sde::State& x) { return std::sqrt(weights->dot(x.cwiseAbs2())); };
  return p;
}

namespace {

EulerDiagnostics diagnose(int step, double t, const SpectralVelocityField& u, double s) {
  return {step, t, energy(u), enstrophy(u), sobolev_norm(u, s), relative_divergence_residual(u)};
}

}  // namespace

EulerianRun run_eulerian(const SpectralVelocityField& u0, const QWienerSpec& spec,
                         const EulerianRunConfig& config, std::span<const sde::NoiseVector> increments) {
  const auto problem = make_eulerian_problem(u0, spec, config.setup);
  const int n = u0.resolution();
  const int stride = std::max(1, config.record_stride);
  const auto& grid = config.grid;

  EulerianRun run;
  sde::PathOptions options;
  options.record_states = false;
  options.observer = [&](int step, double t, const sde::State& x, const sde::NoiseVector*) {
    if (step % stride != 0 && step != grid.steps) return;
    auto u = unpack(x, n);
    run.diagnostics.push_back(diagnose(step, t, u, config.setup.sobolev_index));
    run.max_divergence_residual = std::max(run.max_divergence_residual, run.diagnostics.back().divergence_residual);
    if (config.keep_fields) run.states.push_back({std::move(u), t});
  };
  const auto path = sde::solve_path_with_increments(problem, config.scheme, grid, increments, options);

  // An exit or abort can land between recording strides.
  if (run.diagnostics.empty() || run.diagnostics.back().step != path.steps_taken) {
    if (path.status != sde::PathStatus::aborted) {
      const auto u = unpack(path.final_state, n);
      run.diagnostics.push_back(diagnose(path.steps_taken, grid.time(path.steps_taken), u, config.setup.sobolev_index));
      run.max_divergence_residual = std::max(run.max_divergence_residual, run.diagnostics.back().divergence_residual);
      if (config.keep_fields) run.states.push_back({u, grid.time(path.steps_taken)});
    }
  }
  run.status = path.status;
  run.exit_time = path.exit_time;
  run.diagnostic = path.diagnostic;
  run.final_state = {unpack(path.final_state, n), grid.time(path.steps_taken)};
  return run;
}

EulerianRun run_eulerian(const SpectralVelocityField& u0, const QWienerSpec& spec,
                         const EulerianRunConfig& config, RandomStream& stream) {
  const auto problem = make_eulerian_problem(u0, spec, config.setup);
  const auto increments = sde::sample_increments(problem, config.grid, stream);
  return run_eulerian(u0, spec, config, increments);
}

}  // namespace sel
