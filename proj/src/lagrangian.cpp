#include "sel/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "sel/parallel.hpp"

namespace sel {
namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double minimal_image(double d) { return d - two_pi * std::round(d / two_pi); }

Vec2 minimal_image(Vec2 d) { return {minimal_image(d.x), minimal_image(d.y)}; }

double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

}  // namespace

ParticleEnsemble make_particles(const SpectralVelocityField& u0, int per_side) {
  if (per_side <= 0) throw std::invalid_argument("particle grid side must be positive");
  std::vector<Vec2> labels;
  labels.reserve(static_cast<std::size_t>(per_side) * per_side);
  const double h = two_pi / per_side;
  for (int j = 0; j < per_side; ++j)
    for (int i = 0; i < per_side; ++i) labels.push_back({i * h, j * h});
  auto p = make_particles(u0, std::move(labels));
  p.per_side = per_side;
  return p;
}

ParticleEnsemble make_particles(const SpectralVelocityField& u0, std::vector<Vec2> labels) {
  ParticleEnsemble p;
  for (auto& l : labels) l = wrap_to_torus(l);
  p.labels = std::move(labels);
  p.positions = p.labels;
  p.velocities = evaluate_at(u0, p.positions);
  return p;
}

ParticleEnsemble advect(const ParticleEnsemble& particles, const VelocityProvider& u, double dt) {
  ParticleEnsemble out = particles;
  const auto k1 = evaluate_at(u(particles.t), particles.positions);
  std::vector<Vec2> mid(particles.size());
  for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = wrap_to_torus(particles.positions[i] + k1[i] * (0.5 * dt));
  const auto k2 = evaluate_at(u(particles.t + 0.5 * dt), mid);
  for (std::size_t i = 0; i < mid.size(); ++i) out.positions[i] = wrap_to_torus(particles.positions[i] + k2[i] * dt);
  out.t = particles.t + dt;
  return out;
}

SpectralVelocityField material_acceleration(const SpectralVelocityField& u) {
  return gradient_part(advection_term(u));
}

AccelerationEvaluator::AccelerationEvaluator(const SpectralVelocityField& u)
    : u_(u), dx_(partial_derivative(u, 0)), dy_(partial_derivative(u, 1)),
      projected_(leray_project(advection_term(u))) {}

std::vector<Vec2> AccelerationEvaluator::operator()(std::span<const Vec2> points) const {
  // The pointwise product keeps the modes beyond N that the truncated
  // Galerkin drift throws away.
  auto a = evaluate_at(u_, points);
  const auto gx = evaluate_at(dx_, points);
  const auto gy = evaluate_at(dy_, points);
  const auto p = evaluate_at(projected_, points);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = gx[i] * a[i].x + gy[i] * a[i].y - p[i];
  return a;
}

std::vector<Vec2> material_acceleration_at(const SpectralVelocityField& u, std::span<const Vec2> points) {
  return AccelerationEvaluator(u)(points);
}

namespace {

// max_i |eta_i - v_i| relative to max_i |v_i|
double relative_mismatch(std::span<const Vec2> eta, std::span<const Vec2> v) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    diff = std::max(diff, norm(eta[i] - v[i]));
    scale = std::max(scale, norm(v[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

double max_mismatch(std::span<const Vec2> a, std::span<const Vec2> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, norm(a[i] - b[i]));
  return d;
}

}  // namespace

SprayResult spray(const ParticleEnsemble& particles, const SpectralVelocityField& u, double tol) {
  SprayResult r;
  r.accelerations = material_acceleration_at(u, particles.positions);
  const auto carried = evaluate_at(u, particles.positions);
  r.consistency_error = relative_mismatch(particles.velocities, carried);
  r.consistent = r.consistency_error <= tol;
  return r;
}

std::vector<Vec2> lagrangian_noise(const ParticleEnsemble& particles, const NoiseIncrement& increment) {
  return evaluate_at(increment.field, particles.positions);
}

sde::SdeProblem make_stacked_lagrangian_problem(const ParticleEnsemble& particles, const QWienerSpec& spec,
                                                const SpectralVelocityField& u) {
  const auto count = static_cast<Eigen::Index>(particles.size());
  const auto accel = std::make_shared<const AccelerationEvaluator>(u);
  const auto spec_ptr = std::make_shared<const QWienerSpec>(spec);

  auto positions_of = [count](const sde::State& x) {
    std::vector<Vec2> pos(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) pos[i] = wrap_to_torus({x[4 * i], x[4 * i + 1]});
    return pos;
  };

  sde::SdeProblem p;
  p.initial.resize(4 * count);
  for (Eigen::Index i = 0; i < count; ++i) {
    p.initial.segment<4>(4 * i) << particles.positions[i].x, particles.positions[i].y,
        particles.velocities[i].x, particles.velocities[i].y;
  }
  p.noise_variances = spec.eigenvalues();
  p.drift = [count, accel, positions_of](double, const sde::State& x) {
    const auto a = (*accel)(positions_of(x));
    sde::State b(x.size());
    for (Eigen::Index i = 0; i < count; ++i) b.segment<4>(4 * i) << x[4 * i + 2], x[4 * i + 3], a[i].x, a[i].y;
    return b;
  };
  p.diffusion = [count, spec_ptr, positions_of](const sde::State& x, const sde::NoiseVector& dw) {
    const auto w = spec_ptr->field_from_coordinates(std::span<const double>(dw.data(), static_cast<std::size_t>(dw.size())));
    const auto kicks = evaluate_at(w, positions_of(x));
    sde::State s = sde::State::Zero(x.size());
    for (Eigen::Index i = 0; i < count; ++i) {
      s[4 * i + 2] = kicks[i].x;
      s[4 * i + 3] = kicks[i].y;
    }
    return s;
  };
  return p;
}

JacobianRange jacobian_range(const ParticleEnsemble& particles) {
  const int n = particles.per_side;
  if (n <= 1) throw std::invalid_argument("jacobian proxy needs labels on a uniform grid");
  const double h = two_pi / n;
  const double area0 = h * h;
  JacobianRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  auto at = [&](int i, int j) { return particles.positions[static_cast<std::size_t>((j % n) * n + (i % n))]; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Vec2 p0 = at(i, j);
      const Vec2 r1 = minimal_image(at(i + 1, j) - p0);
      const Vec2 r2 = minimal_image(at(i + 1, j + 1) - p0);
      const Vec2 r3 = minimal_image(at(i, j + 1) - p0);
      const double ratio = 0.5 * (cross(r1, r2) + cross(r2, r3)) / area0;
      r.min = std::min(r.min, ratio);
      r.max = std::max(r.max, ratio);
    }
  }
  return r;
}

std::vector<double> equivalence_residual(std::span<const SpectralVelocityField> fields,
                                         std::span<const std::vector<Vec2>> positions,
                                         std::span<const SpectralVelocityField> increments, double dt,
                                         NoiseEvaluation evaluation) {
  if (fields.empty() || fields.size() != positions.size() || increments.size() + 1 != fields.size())
    throw std::invalid_argument("equivalence residual: mismatched time grids");
  const std::size_t steps = increments.size();
  for (const auto& p : positions) {
    if (p.size() != positions[0].size()) throw std::invalid_argument("equivalence residual: particle count changes");
  }

  auto eta = evaluate_at(fields[0], positions[0]);
  auto accel = material_acceleration_at(fields[0], positions[0]);
  for (std::size_t j = 0; j < steps; ++j) {
    const auto& from = positions[j];
    const auto& to = positions[j + 1];
    const auto next_accel = material_acceleration_at(fields[j + 1], to);
    std::vector<Vec2> where = from;
    if (evaluation == NoiseEvaluation::midpoint) {
      for (std::size_t i = 0; i < where.size(); ++i)
        where[i] = wrap_to_torus(from[i] + minimal_image(to[i] - from[i]) * 0.5);
    }
    const auto kicks = evaluate_at(increments[j], where);
    for (std::size_t i = 0; i < eta.size(); ++i) {
      eta[i] = eta[i] + (accel[i] + next_accel[i]) * (0.5 * dt);
      eta[i] = eta[i] + kicks[i];
    }
    accel = next_accel;
  }
  const auto final_velocity = evaluate_at(fields[steps], positions[steps]);
  std::vector<double> out(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) out[i] = norm(final_velocity[i] - eta[i]);
  return out;
}

double max_equivalence_residual(std::span<const SpectralVelocityField> fields,
                                std::span<const std::vector<Vec2>> positions,
                                std::span<const SpectralVelocityField> increments, double dt,
                                NoiseEvaluation evaluation) {
  const auto r = equivalence_residual(fields, positions, increments, dt, evaluation);
  return r.empty() ? 0.0 : *std::max_element(r.begin(), r.end());
}

LagrangianRun run_lagrangian(const SpectralVelocityField& u0, const QWienerSpec& spec,
                             const LagrangianRunConfig& config, std::span<const sde::NoiseVector> increments) {
  EulerianSetup setup = config.setup;
  setup.model = EulerModel::euler;
  const auto problem = make_eulerian_problem(u0, spec, setup);
  const int n = u0.resolution();
  const auto& grid = config.grid;
  const int stride = std::max(1, config.record_stride);

  LagrangianRun run;
  ParticleEnsemble particles = make_particles(u0, config.particles_per_side);
  SpectralVelocityField u_prev = u0;
  std::vector<Vec2> accel_prev = material_acceleration_at(u0, particles.positions);

  auto report = [&](int step, double t, const SpectralVelocityField& u, std::span<const Vec2> carried) {
    LagrangianStepReport rep;
    rep.step = step;
    rep.t = t;
    rep.residual = max_mismatch(particles.velocities, carried);
    rep.consistency_error = relative_mismatch(particles.velocities, carried);
    rep.jacobian = particles.per_side > 1 ? jacobian_range(particles) : JacobianRange{};
    rep.divergence_residual = relative_divergence_residual(u);
    run.reports.push_back(rep);
    run.snapshots.push_back(particles);
  };

  sde::PathOptions options;
  options.record_states = false;
  options.observer = [&](int step, double t, const sde::State& x, const sde::NoiseVector* dw) {
    if (step == 0) {
      if (config.keep_paths) {
        run.fields.push_back(u0);
        run.positions.push_back(particles.positions);
      }
      run.max_divergence_residual = relative_divergence_residual(u0);
      report(0, t, u0, particles.velocities);
      return;
    }
    const double t_prev = grid.time(step - 1);
    auto u_new = unpack(x, n);
    const VelocityProvider provider = [&](double s) {
      const double w = (s - t_prev) / grid.dt;
      return (1.0 - w) * u_prev + w * u_new;
    };
    const auto w = spec.field_from_coordinates(std::span<const double>(dw->data(), static_cast<std::size_t>(dw->size())));
    const auto kicks = evaluate_at(w, particles.positions);

    ParticleEnsemble next = advect(particles, provider, grid.dt);
    const auto accel_new = material_acceleration_at(u_new, next.positions);
    for (std::size_t i = 0; i < next.size(); ++i) {
      next.velocities[i] = next.velocities[i] + (accel_prev[i] + accel_new[i]) * (0.5 * grid.dt);
      if (!config.suppress_kicks) next.velocities[i] = next.velocities[i] + kicks[i];
    }
    next.t = t;
    particles = std::move(next);
    accel_prev = accel_new;

    const auto carried = evaluate_at(u_new, particles.positions);
    const double consistency = relative_mismatch(particles.velocities, carried);
    run.max_consistency_error = std::max(run.max_consistency_error, consistency);
    if (consistency > config.consistency_tolerance) ++run.consistency_warnings;
    run.max_divergence_residual = std::max(run.max_divergence_residual, relative_divergence_residual(u_new));
    if (config.keep_paths) {
      run.fields.push_back(u_new);
      run.positions.push_back(particles.positions);
      run.increments.push_back(w);
    }
    const bool outside = !problem.domain.contains(x);
    if (step % stride == 0 || step == grid.steps || outside) report(step, t, u_new, carried);
    u_prev = std::move(u_new);
  };

  const auto path = sde::solve_path_with_increments(problem, config.eulerian_scheme, grid, increments, options);
  run.status = path.status;
  run.exit_time = path.exit_time;
  run.final_particles = particles;
  return run;
}

LagrangianRun run_lagrangian(const SpectralVelocityField& u0, const QWienerSpec& spec,
                             const LagrangianRunConfig& config, RandomStream& stream) {
  EulerianSetup setup = config.setup;
  setup.model = EulerModel::euler;
  const auto problem = make_eulerian_problem(u0, spec, setup);
  const auto increments = sde::sample_increments(problem, config.grid, stream);
  return run_lagrangian(u0, spec, config, increments);
}

EquivalenceStudyResult equivalence_refinement(const SpectralVelocityField& u0, const QWienerSpec& spec,
                                              const EquivalenceStudy& study) {
  if (study.halvings < 2 || study.paths <= 0 || study.coarsest_steps <= 0)
    throw std::invalid_argument("invalid equivalence refinement study");
  const int levels = study.halvings + 1;
  const int finest_steps = study.coarsest_steps << study.halvings;
  const auto problem = make_eulerian_problem(u0, spec, {});

  std::vector<std::vector<double>> residual(static_cast<std::size_t>(study.paths), std::vector<double>(levels));
  std::vector<double> divergence(static_cast<std::size_t>(study.paths), 0.0);
  parallel_for(static_cast<std::size_t>(study.paths), study.threads, [&](std::size_t path) {
    RandomStream stream(study.seed, path, StreamPurpose::refinement);
    auto incs = sde::sample_increments(problem, sde::TimeGrid::uniform(study.horizon, finest_steps), stream);
    for (int level = levels - 1; level >= 0; --level) {
      LagrangianRunConfig cfg;
      cfg.grid = sde::TimeGrid::uniform(study.horizon, study.coarsest_steps << level);
      cfg.particles_per_side = study.particles_per_side;
      cfg.record_stride = cfg.grid.steps;
      const auto run = run_lagrangian(u0, spec, cfg, incs);
      if (run.status != sde::PathStatus::completed) throw std::runtime_error("equivalence path did not complete");
      residual[path][static_cast<std::size_t>(level)] = run.reports.back().residual;
      divergence[path] = std::max(divergence[path], run.max_divergence_residual);
      if (level > 0) incs = sde::coarsen_increments(incs, 2);
    }
  });

  EquivalenceStudyResult out;
  for (int level = 0; level < levels; ++level) {
    double s = 0.0;
    for (const auto& r : residual) s += r[static_cast<std::size_t>(level)];
    out.dts.push_back(study.horizon / (study.coarsest_steps << level));
    out.residuals.push_back(s / study.paths);
  }
  for (double d : divergence) out.max_divergence_residual = std::max(out.max_divergence_residual, d);
  out.slope = sde::fit_log_slope(out.dts, out.residuals);
  return out;
}

}  // namespace sel
