#include "sel/lab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "lab/csv.hpp"
#include "sel/eulerian.hpp"
#include "sel/lagrangian.hpp"
#include "sel/parallel.hpp"
#include "sel/sde.hpp"

namespace sel::lab {

using detail::Csv;

Check make_check(std::string name, double value, double lower, double upper, bool gating) {
  const bool ok = std::isfinite(value) && value >= lower && value <= upper;
  return {std::move(name), value, lower, upper, ok, gating};
}

bool ExperimentResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed || !c.gating; });
}

const char* to_string(StreamPurpose p) {
  switch (p) {
    case StreamPurpose::noise:
      return "noise";
    case StreamPurpose::initial_condition:
      return "initial-condition";
    case StreamPurpose::refinement:
      return "refinement";
    case StreamPurpose::statistics:
      return "statistics";
  }
  return "?";
}

SpectralVelocityField initial_field(const ExperimentConfig& c) {
  const int n = c.resolution;
  switch (c.initial) {
    case InitialKind::taylor_green:
      return taylor_green(n, c.initial_amplitude);
    case InitialKind::zero:
      return SpectralVelocityField(n);
    case InitialKind::single_mode: {
      const Wavevector k{c.mode_kx, c.mode_ky};
      const double len = std::sqrt(static_cast<double>(k.norm2()));
      // shear: amplitude along k_perp, so the field is divergence free
      return sine_mode(n, k, {-k.y / len, k.x / len}, c.initial_amplitude);
    }
    case InitialKind::random: {
      const auto shape = build_spectrum(n, c.initial_slope, 1.0, 0);
      RandomStream stream(c.initial_seed, 0, StreamPurpose::initial_condition);
      auto coords = standard_normals(shape.size(), stream);
      const auto lambda = shape.eigenvalues();
      for (std::size_t j = 0; j < coords.size(); ++j) coords[j] *= std::sqrt(lambda[j]);
      auto u = shape.field_from_coordinates(coords);
      const double norm = l2_norm(u);
      if (norm > 0.0) u *= c.initial_amplitude / norm;
      return u;
    }
  }
  throw std::logic_error("unhandled initial condition");
}

QWienerSpec noise_spec(const ExperimentConfig& c) {
  return build_spectrum(c.resolution, c.noise_gamma, c.noise_amplitude, c.noise_s_prime);
}

namespace {

constexpr double divergence_tolerance = 1e-10;

EulerianSetup setup_for(const ExperimentConfig& c, const SpectralVelocityField& u0, EulerModel model) {
  EulerianSetup s;
  s.model = model;
  s.alpha.alpha = c.alpha;
  s.sobolev_index = c.sobolev_index;
  s.radius = localization_radius(u0, c.sobolev_index, c.radius_factor);
  return s;
}

void record_streams(ExperimentResult& r, const ExperimentConfig& c, std::size_t count, StreamPurpose purpose) {
  for (std::size_t i = 0; i < count; ++i) r.streams.push_back({i, purpose, derive_stream_key(c.seed, i, purpose)});
}

void note_noise(ExperimentResult& r, const QWienerSpec& spec) {
  char trace[32];
  std::snprintf(trace, sizeof trace, "%.6g", spec.trace());
  r.notes.push_back("noise modes " + std::to_string(spec.size()) + ", trace(Q) " + trace +
                    (spec.converges_in_limit() ? ", H^s' budget bounded as N grows"
                                               : ", H^s' budget diverges as N grows (2 gamma - 2 s' <= 2)"));
}

[[noreturn]] void abort_trajectory(std::size_t index, const std::string& diagnostic) {
  throw std::runtime_error("trajectory " + std::to_string(index) + ": " + diagnostic);
}

std::string field_csv(const SpectralVelocityField& u) {
  Csv csv("kx,ky,ux_re,ux_im,uy_re,uy_im");
  const auto& lat = u.lattice();
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const auto k = lat.wavevector(i);
    csv.row(k.x, k.y, u.x_coeffs()[i].real(), u.x_coeffs()[i].imag(), u.y_coeffs()[i].real(),
            u.y_coeffs()[i].imag());
  }
  return csv.take();
}

double max_abs_difference(const SpectralVelocityField& a, const SpectralVelocityField& b) {
  return (pack(a) - pack(b)).cwiseAbs().maxCoeff();
}

// simulate-euler and simulate-averaged

ExperimentResult simulate(const ExperimentConfig& c, unsigned threads, EulerModel model) {
  ExperimentResult r;
  const auto u0 = initial_field(c);
  const auto spec = noise_spec(c);
  note_noise(r, spec);

  EulerianRunConfig run_cfg;
  run_cfg.grid = sde::TimeGrid::uniform(c.t_end, c.steps());
  run_cfg.scheme = c.scheme;
  run_cfg.setup = setup_for(c, u0, model);
  run_cfg.record_stride = c.output_stride;
  const auto problem = make_eulerian_problem(u0, spec, run_cfg.setup);

  const auto paths = static_cast<std::size_t>(c.ensemble);
  std::vector<EulerianRun> runs(paths);
  parallel_for(paths, threads, [&](std::size_t i) {
    RandomStream stream(c.seed, i, StreamPurpose::noise);
    runs[i] = run_eulerian(u0, spec, run_cfg, stream);
  });
  record_streams(r, c, paths, StreamPurpose::noise);

  Csv diag("path,step,t,energy,enstrophy,sobolev_norm,divergence_residual");
  Csv summary("path,status,exit_time,steps,final_energy");
  double max_div = 0.0;
  int exited = 0;
  for (std::size_t i = 0; i < paths; ++i) {
    const auto& run = runs[i];
    if (run.status == sde::PathStatus::aborted) abort_trajectory(i, run.diagnostic);
    for (const auto& d : run.diagnostics)
      diag.row(i, d.step, d.t, d.energy, d.enstrophy, d.sobolev_norm, d.divergence_residual);
    max_div = std::max(max_div, run.max_divergence_residual);
    if (run.status == sde::PathStatus::exited) ++exited;
    summary.row(i, sde::PathStatus::exited == run.status ? "exited" : "completed",
                run.exit_time ? *run.exit_time : std::numeric_limits<double>::quiet_NaN(),
                run.diagnostics.back().step, energy(run.final_state.u));
  }
  r.files.push_back({"diagnostics.csv", diag.take()});
  r.files.push_back({"paths.csv", summary.take()});
  r.files.push_back({"final_field.csv", field_csv(runs[0].final_state.u)});

  r.checks.push_back(make_check("max relative divergence residual", max_div, 0.0, divergence_tolerance));
  r.checks.push_back(make_check("paths leaving the localization ball", exited, 0, 0, false));

  const auto drift_at_u0 = model == EulerModel::averaged ? averaged_drift(u0, {c.alpha}) : euler_drift(u0);
  if (c.noise_amplitude == 0.0 && c.initial == InitialKind::taylor_green) {
    r.checks.push_back(make_check("taylor-green drift norm", l2_norm(drift_at_u0), 0.0, 1e-8));
    const double scale = l2_norm(u0);
    const double drift = scale > 0.0 ? l2_norm(runs[0].final_state.u - u0) / scale : 0.0;
    r.checks.push_back(make_check("taylor-green relative L2 change at t_end", drift, 0.0, 1e-8));
  }
  if (c.initial == InitialKind::single_mode)
    r.checks.push_back(make_check("single shear mode drift norm", l2_norm(drift_at_u0), 0.0, 1e-10));

  if (model == EulerModel::averaged && c.alpha == 0.0) {
    // alpha = 0 must reproduce plain Euler on the same increments, bit for bit
    RandomStream stream(c.seed, 0, StreamPurpose::noise);
    const auto increments = sde::sample_increments(problem, run_cfg.grid, stream);
    auto plain_cfg = run_cfg;
    plain_cfg.setup.model = EulerModel::euler;
    const auto plain = run_eulerian(u0, spec, plain_cfg, increments);
    r.checks.push_back(make_check("alpha = 0 vs plain Euler, max coefficient difference",
                                  max_abs_difference(plain.final_state.u, runs[0].final_state.u), 0.0, 0.0));
  }
  return r;
}

// equivalence

ExperimentResult equivalence(const ExperimentConfig& c, unsigned threads) {
  ExperimentResult r;
  const auto u0 = initial_field(c);
  const auto spec = noise_spec(c);
  note_noise(r, spec);
  if (c.alpha != 0.0) r.notes.push_back("model.alpha ignored: the particle formulation co-evolves plain Euler");

  LagrangianRunConfig cfg;
  cfg.grid = sde::TimeGrid::uniform(c.t_end, c.steps());
  cfg.particles_per_side = c.particles_per_side;
  cfg.record_stride = c.output_stride;
  cfg.setup = setup_for(c, u0, EulerModel::euler);

  const auto problem = make_eulerian_problem(u0, spec, cfg.setup);
  RandomStream stream(c.seed, 0, StreamPurpose::noise);
  const auto increments = sde::sample_increments(problem, cfg.grid, stream);
  record_streams(r, c, 1, StreamPurpose::noise);

  // The two runs are independent; both are needed for the vertical-lift check.
  LagrangianRun run, unkicked;
  auto quiet_cfg = cfg;
  quiet_cfg.suppress_kicks = true;
  parallel_for(2, threads, [&](std::size_t i) {
    if (i == 0)
      run = run_lagrangian(u0, spec, cfg, increments);
    else
      unkicked = run_lagrangian(u0, spec, quiet_cfg, increments);
  });
  if (run.status == sde::PathStatus::aborted) abort_trajectory(0, "non-finite Eulerian state");

  Csv particles("t,particle_id,label_x,label_y,pos_x,pos_y,vel_x,vel_y");
  for (const auto& snap : run.snapshots)
    for (std::size_t i = 0; i < snap.size(); ++i)
      particles.row(snap.t, i, snap.labels[i].x, snap.labels[i].y, snap.positions[i].x, snap.positions[i].y,
                    snap.velocities[i].x, snap.velocities[i].y);
  Csv reports("step,t,residual,consistency_error,jacobian_min,jacobian_max,divergence_residual");
  double jac_dev = 0.0;
  for (const auto& rep : run.reports) {
    reports.row(rep.step, rep.t, rep.residual, rep.consistency_error, rep.jacobian.min, rep.jacobian.max,
                rep.divergence_residual);
    jac_dev = std::max({jac_dev, 1.0 - rep.jacobian.min, rep.jacobian.max - 1.0});
  }
  r.files.push_back({"particles.csv", particles.take()});
  r.files.push_back({"residuals.csv", reports.take()});

  double lift = 0.0;
  const auto& a = run.final_particles.positions;
  const auto& b = unkicked.final_particles.positions;
  for (std::size_t i = 0; i < a.size(); ++i) lift = std::max(lift, norm(a[i] - b[i]));

  // A small label set keeps the finite-difference trace cheap.
  const auto probe = make_particles(u0, 4);
  const auto stacked = make_stacked_lagrangian_problem(probe, spec, u0);
  const double strat = sde::stratonovich_correction(stacked, stacked.initial).cwiseAbs().maxCoeff();

  double max_div = run.max_divergence_residual;
  const bool deterministic = c.noise_amplitude == 0.0;
  if (!deterministic) {
    EquivalenceStudy study;
    study.horizon = c.t_end;
    study.coarsest_steps = c.steps();
    study.halvings = c.halvings;
    study.paths = c.ensemble;
    study.particles_per_side = c.particles_per_side;
    study.seed = c.seed;
    study.threads = threads;
    const auto res = equivalence_refinement(u0, spec, study);
    record_streams(r, c, static_cast<std::size_t>(c.ensemble), StreamPurpose::refinement);
    Csv refine("level,dt,mean_residual");
    for (std::size_t l = 0; l < res.dts.size(); ++l) refine.row(l, res.dts[l], res.residuals[l]);
    r.files.push_back({"refinement.csv", refine.take()});
    r.checks.push_back(make_check("equivalence residual decay slope", res.slope, 0.6, 1.4));
    max_div = std::max(max_div, res.max_divergence_residual);
  } else {
    r.checks.push_back(make_check("deterministic equivalence residual at t_end", run.reports.back().residual, 0.0, 1e-6));
  }
  r.checks.push_back(make_check("max relative divergence residual", max_div, 0.0, divergence_tolerance));
  r.checks.push_back(make_check("positions with vs without noise kicks", lift, 0.0, 0.0));
  r.checks.push_back(make_check("Stratonovich correction of the particle diffusion", strat, 0.0, 1e-8));
  const double eps = deterministic && c.initial == InitialKind::taylor_green ? 1e-3 : 0.05;
  r.checks.push_back(make_check("label quad area ratio deviation", jac_dev, 0.0, eps, false));
  r.checks.push_back(make_check("steps over consistency tolerance", run.consistency_warnings, 0, 0, false));
  return r;
}

// convergence

ExperimentResult convergence(const ExperimentConfig& c, unsigned threads) {
  ExperimentResult r;
  sde::SdeProblem p;
  sde::ConvergenceStudy study;
  study.horizon = c.t_end;
  study.coarsest_steps = c.steps();
  study.levels = c.halvings + 1;
  study.paths = c.ensemble;
  study.seed = c.seed;
  study.threads = threads;
  double lo = 0.7, hi = 1.3;

  switch (c.benchmark) {
    case Benchmark::stratonovich_scalar:
      // dX = X o dW, X_T = X_0 exp(W_T)
      p.drift = [](double, const sde::State& x) { return sde::State(sde::State::Zero(x.size())); };
      p.diffusion = [](const sde::State& x, const sde::NoiseVector& dw) { return sde::State(x * dw[0]); };
      p.noise_variances = {1.0};
      p.initial = sde::State::Ones(1);
      study.scheme = sde::Scheme::heun;
      study.exact = [](const sde::State& x0, const sde::NoiseVector& w) { return sde::State(x0 * std::exp(w[0])); };
      lo = 0.5;
      break;
    case Benchmark::additive_linear:
      // Ornstein-Uhlenbeck dX = -X dt + dW/2
      p.drift = [](double, const sde::State& x) { return sde::State(-x); };
      p.diffusion = [](const sde::State&, const sde::NoiseVector& dw) { return sde::State(0.5 * dw); };
      p.noise_variances = {1.0};
      p.initial = sde::State::Ones(1);
      study.scheme = sde::Scheme::euler_maruyama;
      break;
    case Benchmark::euler_additive: {
      const auto spec = noise_spec(c);
      if (spec.trace() == 0.0) throw std::invalid_argument("euler-additive benchmark needs noise.amplitude > 0");
      note_noise(r, spec);
      p = make_eulerian_problem(initial_field(c), spec, {});
      study.scheme = sde::Scheme::euler_maruyama;
      break;
    }
  }
  r.notes.push_back(std::string("scheme ") + sde::to_string(study.scheme) + " fixed by benchmark " +
                    to_string(c.benchmark) + (study.exact ? ", exact reference" : ", finer-grid reference"));
  const auto res = sde::strong_convergence_order(p, study);
  record_streams(r, c, static_cast<std::size_t>(c.ensemble), StreamPurpose::refinement);

  Csv csv("level,dt,rms_error");
  for (std::size_t l = 0; l < res.dts.size(); ++l) csv.row(l, res.dts[l], res.errors[l]);
  r.files.push_back({"convergence.csv", csv.take()});
  Csv summary("benchmark,scheme,order,lower,upper");
  summary.row(to_string(c.benchmark), sde::to_string(study.scheme), res.order, lo, hi);
  r.files.push_back({"summary.csv", summary.take()});
  r.checks.push_back(make_check(std::string("strong order, ") + to_string(c.benchmark), res.order, lo, hi));
  return r;
}

// isometry and Q-Wiener statistics

ExperimentResult isometry(const ExperimentConfig& c, unsigned threads) {
  ExperimentResult r;
  const auto spec = noise_spec(c);
  if (spec.trace() == 0.0) throw std::invalid_argument("isometry needs noise.amplitude > 0");
  note_noise(r, spec);
  const auto integrand = noise_operator_eulerian({c.alpha});
  const auto grid = sde::TimeGrid::uniform(c.t_end, c.steps());
  const auto lambda = spec.eigenvalues();
  const std::size_t modes = spec.size();
  const auto paths = static_cast<std::size_t>(c.ensemble);

  std::vector<double> norm_sq(paths);
  std::vector<std::vector<double>> first(paths);
  parallel_for(paths, threads, [&](std::size_t i) {
    RandomStream stream(c.seed, i, StreamPurpose::noise);
    std::vector<double> total(modes, 0.0);
    for (int n = 0; n < grid.steps; ++n) {
      const auto dw = gaussian_increment(lambda, grid.dt, stream);
      if (n == 0) first[i] = dw;
      for (std::size_t j = 0; j < modes; ++j) total[j] += dw[j];
    }
    norm_sq[i] = energy(integrand(spec.field_from_coordinates(total)));
  });
  record_streams(r, c, paths, StreamPurpose::noise);

  const double n = static_cast<double>(paths);
  const double l2q = l2q_norm(integrand, spec);
  const double expected = c.t_end * l2q * l2q;
  double mean = 0.0, m2 = 0.0;
  for (double v : norm_sq) mean += v / n;
  for (double v : norm_sq) m2 += (v - mean) * (v - mean);
  const double stderr_ = std::sqrt(m2 / (n - 1.0) / n);
  const double z = (mean - expected) / stderr_;

  Csv per_path("path,norm_sq");
  for (std::size_t i = 0; i < paths; ++i) per_path.row(i, norm_sq[i]);
  r.files.push_back({"isometry_paths.csv", per_path.take()});
  Csv summary("samples,t_end,empirical_mean,theoretical_mean,std_error,z");
  summary.row(paths, c.t_end, mean, expected, stderr_, z);
  r.files.push_back({"isometry.csv", summary.take()});
  r.checks.push_back(make_check("Ito isometry |z|", std::abs(z), 0.0, 4.0));

  // Per-mode variance of single increments: E[x^2] = lambda dt with
  // standard error sqrt(2) lambda dt / sqrt(n) for Gaussian samples.
  Csv mode_csv("mode,kx,ky,parity,eigenvalue,empirical_variance,expected_variance,z");
  double max_var_z = 0.0;
  for (std::size_t j = 0; j < modes; ++j) {
    const auto& m = spec.modes()[j];
    double s = 0.0;
    for (std::size_t i = 0; i < paths; ++i) s += first[i][j] * first[i][j];
    const double var = s / n;
    const double want = lambda[j] * grid.dt;
    const double zj = (var - want) / (std::sqrt(2.0 / n) * want);
    max_var_z = std::max(max_var_z, std::abs(zj));
    mode_csv.row(j, m.k.x, m.k.y, m.parity == ModeParity::cosine ? "cos" : "sin", lambda[j], var, want, zj);
  }
  r.files.push_back({"modes.csv", mode_csv.take()});
  r.checks.push_back(make_check("max per-mode variance |z|", max_var_z, 0.0, 4.0));

  // Cross covariances: the normalised product has unit variance under
  // independence, so sqrt(n) * correlation is the z-score.
  constexpr std::size_t cross_limit = 64;
  if (modes <= cross_limit) {
    double max_cross = 0.0;
    for (std::size_t a = 0; a < modes; ++a) {
      for (std::size_t b = a + 1; b < modes; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < paths; ++i) s += first[i][a] * first[i][b];
        const double corr = s / n / (std::sqrt(lambda[a] * lambda[b]) * grid.dt);
        max_cross = std::max(max_cross, std::abs(corr) * std::sqrt(n));
      }
    }
    r.checks.push_back(make_check("max cross-mode covariance |z|", max_cross, 0.0, 4.0));
  } else {
    r.notes.push_back("cross-mode covariance test skipped: more than " + std::to_string(cross_limit) +
                      " modes would make |z| < 4 fail by multiplicity alone");
  }
  return r;
}

// energy growth

ExperimentResult energy_growth(const ExperimentConfig& c, unsigned threads) {
  ExperimentResult r;
  const auto u0 = initial_field(c);
  const auto spec = noise_spec(c);
  note_noise(r, spec);
  if (c.alpha != 0.0) r.notes.push_back("model.alpha ignored: the growth law is checked for plain Euler");

  EulerianRunConfig run_cfg;
  run_cfg.grid = sde::TimeGrid::uniform(c.t_end, c.steps());
  run_cfg.scheme = c.scheme;
  run_cfg.setup = setup_for(c, u0, EulerModel::euler);
  run_cfg.record_stride = c.output_stride;

  const auto paths = static_cast<std::size_t>(c.ensemble);
  std::vector<EulerianRun> runs(paths);
  parallel_for(paths, threads, [&](std::size_t i) {
    RandomStream stream(c.seed, i, StreamPurpose::noise);
    runs[i] = run_eulerian(u0, spec, run_cfg, stream);
  });
  record_streams(r, c, paths, StreamPurpose::noise);

  // Per-path least-squares slope of ||u||^2 against t; the paths are
  // independent, so their spread gives the standard error.
  std::vector<double> slopes(paths);
  double max_div = 0.0;
  int incomplete = 0;
  for (std::size_t i = 0; i < paths; ++i) {
    const auto& d = runs[i].diagnostics;
    if (runs[i].status == sde::PathStatus::aborted) abort_trajectory(i, runs[i].diagnostic);
    if (runs[i].status != sde::PathStatus::completed) ++incomplete;
    max_div = std::max(max_div, runs[i].max_divergence_residual);
    double st = 0, se = 0, stt = 0, ste = 0;
    for (const auto& row : d) {
      st += row.t;
      se += row.energy;
      stt += row.t * row.t;
      ste += row.t * row.energy;
    }
    const double m = static_cast<double>(d.size());
    slopes[i] = d.size() > 1 ? (m * ste - st * se) / (m * stt - st * st) : 0.0;
  }
  const double n = static_cast<double>(paths);
  double mean = 0.0, m2 = 0.0;
  for (double s : slopes) mean += s / n;
  for (double s : slopes) m2 += (s - mean) * (s - mean);
  const double stderr_ = paths > 1 ? std::sqrt(m2 / (n - 1.0) / n) : std::numeric_limits<double>::infinity();
  const double expected = spec.trace();
  const double z = (mean - expected) / stderr_;

  Csv curve("step,t,mean_energy,std_error");
  const auto& ref = runs[0].diagnostics;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    double s = 0.0, s2 = 0.0, count = 0.0;
    for (const auto& run : runs) {
      if (k >= run.diagnostics.size()) continue;
      s += run.diagnostics[k].energy;
      s2 += run.diagnostics[k].energy * run.diagnostics[k].energy;
      count += 1.0;
    }
    const double mu = s / count;
    const double var = count > 1.0 ? std::max(0.0, (s2 - count * mu * mu) / (count - 1.0)) : 0.0;
    curve.row(ref[k].step, ref[k].t, mu, std::sqrt(var / count));
  }
  r.files.push_back({"energy.csv", curve.take()});
  Csv per_path("path,slope,status");
  for (std::size_t i = 0; i < paths; ++i)
    per_path.row(i, slopes[i], runs[i].status == sde::PathStatus::completed ? "completed" : "exited");
  r.files.push_back({"path_slopes.csv", per_path.take()});
  Csv summary("paths,mean_slope,std_error,trace_q,z");
  summary.row(paths, mean, stderr_, expected, z);
  r.files.push_back({"energy_growth.csv", summary.take()});

  r.checks.push_back(make_check("energy growth slope vs trace(Q) |z|", std::abs(z), 0.0, 4.0));
  r.checks.push_back(make_check("paths stopped before t_end", incomplete, 0, 0));
  r.checks.push_back(make_check("max relative divergence residual", max_div, 0.0, divergence_tolerance));
  return r;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads) {
  switch (config.kind) {
    case ExperimentKind::simulate_euler:
      return simulate(config, threads, EulerModel::euler);
    case ExperimentKind::simulate_averaged:
      return simulate(config, threads, EulerModel::averaged);
    case ExperimentKind::equivalence:
      return equivalence(config, threads);
    case ExperimentKind::convergence:
      return convergence(config, threads);
    case ExperimentKind::isometry:
      return isometry(config, threads);
    case ExperimentKind::energy_growth:
      return energy_growth(config, threads);
  }
  throw std::logic_error("unhandled experiment kind");
}

}  // namespace sel::lab
