#include "sel/sde.hpp"

#include <cmath>
#include <stdexcept>

#include "sel/parallel.hpp"

namespace sel::sde {

double LocalizationDomain::distance(const State& x) const {
  if (center.size() == 0) return norm ? norm(x) : x.norm();
  const State d = x - center;
  return norm ? norm(d) : d.norm();
}

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::euler_maruyama:
      return "euler-maruyama";
    case Scheme::heun:
      return "heun";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "euler-maruyama") return Scheme::euler_maruyama;
  if (name == "heun") return Scheme::heun;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

TimeGrid TimeGrid::uniform(double horizon, int steps) {
  if (!(horizon >= 0.0) || steps < 0) throw std::invalid_argument("invalid time grid");
  return {0.0, steps > 0 ? horizon / steps : 0.0, steps};
}

namespace {

State apply_diffusion(const SdeProblem& p, const State& x, const NoiseVector& dw) {
  if (!p.diffusion || dw.size() == 0) return State::Zero(x.size());
  return p.diffusion(x, dw);
}

void require_increment_size(const SdeProblem& p, const NoiseVector& dw) {
  if (static_cast<std::size_t>(dw.size()) != p.noise_dim())
    throw std::invalid_argument("noise increment dimension does not match the noise spec");
}

}  // namespace

State step_euler_maruyama(const SdeProblem& p, double t, const State& x, const NoiseVector& dw, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  require_increment_size(p, dw);
  return x + p.drift(t, x) * dt + apply_diffusion(p, x, dw);
}

State step_heun_stratonovich(const SdeProblem& p, double t, const State& x, const NoiseVector& dw,
                             double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  require_increment_size(p, dw);
  const State b0 = p.drift(t, x);
  const State s0 = apply_diffusion(p, x, dw);
  const State predictor = x + b0 * dt + s0;
  const State b1 = p.drift(t + dt, predictor);
  const State s1 = apply_diffusion(p, predictor, dw);
  return x + 0.5 * (b0 + b1) * dt + 0.5 * (s0 + s1);
}

State step(const SdeProblem& p, Scheme scheme, double t, const State& x, const NoiseVector& dw, double dt) {
  return scheme == Scheme::heun ? step_heun_stratonovich(p, t, x, dw, dt)
                                : step_euler_maruyama(p, t, x, dw, dt);
}

State stratonovich_correction(const SdeProblem& p, const State& x) {
  return stratonovich_correction(p, x, 1e-5 * (1.0 + x.norm()));
}

State stratonovich_correction(const SdeProblem& p, const State& x, double fd_step) {
  State corr = State::Zero(x.size());
  if (!p.diffusion) return corr;
  NoiseVector e = NoiseVector::Zero(static_cast<Eigen::Index>(p.noise_dim()));
  for (std::size_t k = 0; k < p.noise_dim(); ++k) {
    const double lambda = p.noise_variances[k];
    if (lambda == 0.0) continue;
    e.setZero();
    e[static_cast<Eigen::Index>(k)] = 1.0;
    const State v = p.diffusion(x, e);
    const double vn = v.norm();
    if (vn == 0.0) continue;
    const double t = fd_step / vn;
    const State forward = x + t * v;
    const State backward = x - t * v;
    corr += (0.5 * lambda / (2.0 * t)) * (p.diffusion(forward, e) - p.diffusion(backward, e));
  }
  return corr;
}

SdeProblem ito_form(const SdeProblem& stratonovich) {
  SdeProblem out = stratonovich;
  out.drift = [base = stratonovich](double t, const State& x) {
    return State(base.drift(t, x) + stratonovich_correction(base, x));
  };
  return out;
}

std::vector<NoiseVector> sample_increments(const SdeProblem& p, const TimeGrid& grid, RandomStream& stream) {
  std::vector<NoiseVector> out;
  out.reserve(static_cast<std::size_t>(grid.steps));
  for (int n = 0; n < grid.steps; ++n) {
    const auto g = gaussian_increment(p.noise_variances, grid.dt, stream);
    out.emplace_back(Eigen::Map<const NoiseVector>(g.data(), static_cast<Eigen::Index>(g.size())));
  }
  return out;
}

std::vector<NoiseVector> coarsen_increments(std::span<const NoiseVector> fine, int factor) {
  if (factor <= 0 || fine.size() % static_cast<std::size_t>(factor) != 0)
    throw std::invalid_argument("increment count not divisible by coarsening factor");
  std::vector<NoiseVector> coarse;
  coarse.reserve(fine.size() / factor);
  for (std::size_t i = 0; i < fine.size(); i += factor) {
    NoiseVector s = fine[i];
    for (int j = 1; j < factor; ++j) s += fine[i + j];
    coarse.push_back(std::move(s));
  }
  return coarse;
}

PathResult solve_path_with_increments(const SdeProblem& p, Scheme scheme, const TimeGrid& grid,
                                      std::span<const NoiseVector> increments, const PathOptions& options) {
  if (increments.size() < static_cast<std::size_t>(grid.steps))
    throw std::invalid_argument("fewer noise increments than time steps");
  if (!p.domain.contains_strictly(p.initial))
    throw std::invalid_argument("initial state is not strictly inside the localization domain");
  const int stride = std::max(1, options.record_stride);

  PathResult r;
  State x = p.initial;
  auto record = [&](int n) {
    if (!options.record_states) return;
    r.times.push_back(grid.time(n));
    r.states.push_back(x);
  };
  record(0);
  if (options.observer) options.observer(0, grid.time(0), x, nullptr);

  for (int n = 0; n < grid.steps; ++n) {
    x = step(p, scheme, grid.time(n), x, increments[n], grid.dt);
    r.steps_taken = n + 1;
    if (!x.allFinite()) {
      r.status = PathStatus::aborted;
      r.diagnostic = "non-finite state at step " + std::to_string(n + 1) + " (t = " +
                     std::to_string(grid.time(n + 1)) + ")";
      break;
    }
    const bool outside = !p.domain.contains(x);
    if (options.observer) options.observer(n + 1, grid.time(n + 1), x, &increments[n]);
    if (outside || n + 1 == grid.steps || (n + 1) % stride == 0) record(n + 1);
    if (outside) {
      r.status = PathStatus::exited;
      r.exit_time = grid.time(n + 1);
      r.exit_step = n + 1;
      break;
    }
  }
  r.final_state = std::move(x);
  return r;
}

PathResult solve_path(const SdeProblem& p, Scheme scheme, const TimeGrid& grid, RandomStream& stream,
                      const PathOptions& options) {
  const auto increments = sample_increments(p, grid, stream);
  return solve_path_with_increments(p, scheme, grid, increments, options);
}

double fit_log_slope(std::span<const double> dts, std::span<const double> errors) {
  if (dts.size() != errors.size() || dts.size() < 2)
    throw std::invalid_argument("slope fit needs matching samples, at least two");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(dts.size());
  for (std::size_t i = 0; i < dts.size(); ++i) {
    if (!(errors[i] > 0.0) || !(dts[i] > 0.0)) throw std::domain_error("degenerate (non-positive) error in slope fit");
    const double lx = std::log(dts[i]);
    const double ly = std::log(errors[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceResult strong_convergence_order(const SdeProblem& p, const ConvergenceStudy& study) {
  if (study.levels < 3) throw std::invalid_argument("convergence study needs at least 3 step sizes");
  if (study.paths <= 0 || study.coarsest_steps <= 0) throw std::invalid_argument("invalid convergence study");
  const bool use_exact = static_cast<bool>(study.exact);
  if (!use_exact && study.reference_halvings < 1) throw std::invalid_argument("reference must be finer than the finest level");
  const int finest_level = use_exact ? study.levels - 1 : study.levels - 1 + study.reference_halvings;
  const int finest_steps = study.coarsest_steps << finest_level;

  std::vector<std::vector<double>> sq_err(static_cast<std::size_t>(study.paths),
                                          std::vector<double>(study.levels, 0.0));
  PathOptions quiet;
  quiet.record_states = false;

  parallel_for(static_cast<std::size_t>(study.paths), study.threads, [&](std::size_t path) {
    RandomStream stream(study.seed, path, StreamPurpose::refinement);
    const auto fine_grid = TimeGrid::uniform(study.horizon, finest_steps);
    std::vector<NoiseVector> incs = sample_increments(p, fine_grid, stream);

    State reference;
    if (use_exact) {
      NoiseVector total = NoiseVector::Zero(static_cast<Eigen::Index>(p.noise_dim()));
      for (const auto& dw : incs) total += dw;
      reference = study.exact(p.initial, total);
    } else {
      const auto ref = solve_path_with_increments(p, study.scheme, fine_grid, incs, quiet);
      if (ref.status != PathStatus::completed) throw std::runtime_error("reference path did not complete: " + ref.diagnostic);
      reference = ref.final_state;
      incs = coarsen_increments(incs, 1 << study.reference_halvings);
    }
    for (int level = study.levels - 1; level >= 0; --level) {
      const auto grid = TimeGrid::uniform(study.horizon, study.coarsest_steps << level);
      const auto r = solve_path_with_increments(p, study.scheme, grid, incs, quiet);
      if (r.status != PathStatus::completed)
        throw std::runtime_error("path left the domain or aborted during convergence study");
      sq_err[path][static_cast<std::size_t>(level)] = (r.final_state - reference).squaredNorm();
      if (level > 0) incs = coarsen_increments(incs, 2);
    }
  });

  ConvergenceResult out;
  for (int level = 0; level < study.levels; ++level) {
    double s = 0.0;
    for (const auto& e : sq_err) s += e[static_cast<std::size_t>(level)];
    out.dts.push_back(study.horizon / (study.coarsest_steps << level));
    out.errors.push_back(std::sqrt(s / study.paths));
  }
  out.order = fit_log_slope(out.dts, out.errors);
  return out;
}

}  // namespace sel::sde
