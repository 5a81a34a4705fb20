#include <doctest.h>

#include <cmath>

#include "sel/sde.hpp"

using namespace sel;
using namespace sel::sde;

namespace {

State scalar(double v) { return State::Constant(1, v); }

// dX = mu X dt + sigma X o dW  (Stratonovich reading)
SdeProblem geometric(double mu, double sigma) {
  SdeProblem p;
  p.drift = [mu](double, const State& x) { return State(mu * x); };
  p.diffusion = [sigma](const State& x, const NoiseVector& dw) { return State(sigma * x * dw[0]); };
  p.noise_variances = {1.0};
  p.initial = scalar(1.0);
  return p;
}

SdeProblem brownian(double radius) {
  SdeProblem p;
  p.drift = [](double, const State& x) { return State(State::Zero(x.size())); };
  p.diffusion = [](const State&, const NoiseVector& dw) { return State(dw); };
  p.noise_variances = {1.0};
  p.initial = scalar(0.0);
  p.domain.radius = radius;
  return p;
}

}  // namespace

TEST_CASE("scheme names round-trip") {
  for (auto s : {Scheme::euler_maruyama, Scheme::heun}) CHECK(scheme_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(scheme_from_string("rk4"), std::invalid_argument);
}

TEST_CASE("time grid") {
  const auto g = TimeGrid::uniform(2.0, 8);
  CHECK(g.dt == 0.25);
  CHECK(g.end() == 2.0);
  CHECK_THROWS_AS(TimeGrid::uniform(-1.0, 4), std::invalid_argument);
}

TEST_CASE("one step of each scheme against hand-expanded formulas") {
  auto p = geometric(-1.0, 0.5);
  NoiseVector dw(1);
  dw << 0.2;
  const double dt = 0.1, x = 1.0;
  CHECK(step_euler_maruyama(p, 0.0, scalar(x), dw, dt)[0] == doctest::Approx(x - x * dt + 0.5 * x * 0.2));
  const double pred = x - x * dt + 0.5 * x * 0.2;
  const double heun = x + 0.5 * (-x - pred) * dt + 0.5 * (0.5 * x + 0.5 * pred) * 0.2;
  CHECK(step_heun_stratonovich(p, 0.0, scalar(x), dw, dt)[0] == doctest::Approx(heun).epsilon(1e-15));
  CHECK_THROWS_AS(step_euler_maruyama(p, 0.0, scalar(x), dw, 0.0), std::invalid_argument);
  NoiseVector wrong(2);
  wrong << 0.0, 0.0;
  CHECK_THROWS_AS(step(p, Scheme::heun, 0.0, scalar(x), wrong, dt), std::invalid_argument);
}

TEST_CASE("constant diffusion: Heun and Euler-Maruyama take the same noise step") {
  auto p = brownian(std::numeric_limits<double>::infinity());
  NoiseVector dw(1);
  dw << -0.3;
  CHECK(step_heun_stratonovich(p, 0.0, scalar(0.7), dw, 0.01)[0] == step_euler_maruyama(p, 0.0, scalar(0.7), dw, 0.01)[0]);
  CHECK(stratonovich_correction(p, scalar(0.7)).norm() == 0.0);
}

TEST_CASE("Stratonovich correction for multiplicative noise") {
  // sigma(x) = s x: correction (1/2) lambda s^2 x
  auto p = geometric(0.0, 0.8);
  p.noise_variances = {2.0};
  const double x = 1.7;
  CHECK(stratonovich_correction(p, scalar(x))[0] == doctest::Approx(0.5 * 2.0 * 0.64 * x).epsilon(1e-8));
  const auto ito = ito_form(p);
  CHECK(ito.drift(0.0, scalar(x))[0] == doctest::Approx(0.64 * x).epsilon(1e-8));

  // two-dimensional rotation noise sigma(x) dw = dw J x: correction -lambda x / 2
  SdeProblem rot;
  rot.drift = [](double, const State& x) { return State(State::Zero(x.size())); };
  rot.diffusion = [](const State& x, const NoiseVector& dw) {
    State s(2);
    s << -x[1] * dw[0], x[0] * dw[0];
    return s;
  };
  rot.noise_variances = {1.0};
  State x2(2);
  x2 << 0.3, -1.2;
  const State c = stratonovich_correction(rot, x2);
  CHECK(c[0] == doctest::Approx(-0.15).epsilon(1e-8));
  CHECK(c[1] == doctest::Approx(0.6).epsilon(1e-8));
}

TEST_CASE("Ito and Stratonovich forms agree: Heun on one, Euler-Maruyama on the other") {
  // Both converge to the same exp(W_T) path
  const auto strat = geometric(0.0, 1.0);
  const auto ito = ito_form(strat);
  double err_heun = 0.0, err_em = 0.0;
  const int paths = 200;
  for (int i = 0; i < paths; ++i) {
    RandomStream s(3, static_cast<std::uint64_t>(i), StreamPurpose::refinement);
    const auto grid = TimeGrid::uniform(1.0, 2048);
    const auto incs = sample_increments(strat, grid, s);
    double w = 0.0;
    for (const auto& d : incs) w += d[0];
    const double exact = std::exp(w);
    err_heun += std::pow(solve_path_with_increments(strat, Scheme::heun, grid, incs).final_state[0] - exact, 2);
    err_em += std::pow(solve_path_with_increments(ito, Scheme::euler_maruyama, grid, incs).final_state[0] - exact, 2);
  }
  CHECK(std::sqrt(err_heun / paths) < 5e-3);
  CHECK(std::sqrt(err_em / paths) < 5e-2);
}

TEST_CASE("Ito formula: E[X_T^2] for an additive OU process") {
  // dX = -X dt + dW, X_0 = 1: E X_T^2 = e^{-2T} + (1 - e^{-2T}) / 2
  SdeProblem p;
  p.drift = [](double, const State& x) { return State(-x); };
  p.diffusion = [](const State&, const NoiseVector& dw) { return State(dw); };
  p.noise_variances = {1.0};
  p.initial = scalar(1.0);
  const int paths = 20000;
  const auto grid = TimeGrid::uniform(1.0, 200);
  double m2 = 0.0, m4 = 0.0;
  for (int i = 0; i < paths; ++i) {
    RandomStream s(11, static_cast<std::uint64_t>(i), StreamPurpose::noise);
    const double x = solve_path(p, Scheme::heun, grid, s).final_state[0];
    m2 += x * x;
    m4 += x * x * x * x;
  }
  m2 /= paths;
  m4 /= paths;
  const double want = std::exp(-2.0) + 0.5 * (1.0 - std::exp(-2.0));
  const double se = std::sqrt((m4 - m2 * m2) / paths);
  CHECK(std::abs(m2 - want) < 4.0 * se + 1e-3);
}

TEST_CASE("coarsened increments are block sums") {
  auto p = brownian(1e9);
  RandomStream s(1, 0, StreamPurpose::noise);
  const auto fine = sample_increments(p, TimeGrid::uniform(1.0, 8), s);
  const auto coarse = coarsen_increments(fine, 4);
  REQUIRE(coarse.size() == 2u);
  CHECK(coarse[1][0] == doctest::Approx(fine[4][0] + fine[5][0] + fine[6][0] + fine[7][0]).epsilon(1e-15));
  CHECK_THROWS_AS(coarsen_increments(fine, 3), std::invalid_argument);
}

TEST_CASE("exit detection on the grid") {
  // dX = dt from 0, ball of radius 0.3: first grid time strictly outside
  SdeProblem p;
  p.drift = [](double, const State& x) { return State(State::Ones(x.size())); };
  p.noise_variances = {};
  p.initial = scalar(0.0);
  p.domain.radius = 0.3;
  const auto grid = TimeGrid::uniform(1.0, 64);
  const std::vector<NoiseVector> none(64, NoiseVector(0));
  const auto r = solve_path_with_increments(p, Scheme::euler_maruyama, grid, none);
  REQUIRE(r.exited());
  CHECK(*r.exit_time >= 0.3);
  CHECK(*r.exit_time - 0.3 <= grid.dt);
  CHECK(*r.exit_step == 20);
  CHECK(r.states.size() == 21u);

  // landing exactly on the boundary is still inside (closed ball)
  p.domain.radius = 0.5;
  const auto g2 = TimeGrid::uniform(1.0, 4);
  const std::vector<NoiseVector> none4(4, NoiseVector(0));
  const auto r2 = solve_path_with_increments(p, Scheme::euler_maruyama, g2, none4);
  CHECK(*r2.exit_step == 3);

  p.initial = scalar(0.5);
  CHECK_THROWS_AS(solve_path_with_increments(p, Scheme::heun, g2, none4), std::invalid_argument);
}

TEST_CASE("Brownian exit time from (-R, R) has mean R^2") {
  const double radius = 1.0;
  const auto p = brownian(radius);
  const auto grid = TimeGrid::uniform(20.0, 20000);
  const int paths = 1500;
  double sum = 0.0;
  PathOptions quiet;
  quiet.record_states = false;
  for (int i = 0; i < paths; ++i) {
    RandomStream s(5, static_cast<std::uint64_t>(i), StreamPurpose::noise);
    const auto r = solve_path(p, Scheme::euler_maruyama, grid, s, quiet);
    REQUIRE(r.exited());
    sum += *r.exit_time;
  }
  CHECK(sum / paths == doctest::Approx(radius * radius).epsilon(0.1));
}

TEST_CASE("non-finite states abort the path") {
  SdeProblem p;
  p.drift = [](double, const State& x) { return State(x.cwiseProduct(x) * 1e3); };
  p.noise_variances = {};
  p.initial = scalar(1.0);
  const auto grid = TimeGrid::uniform(1.0, 50);
  const std::vector<NoiseVector> none(50, NoiseVector(0));
  const auto r = solve_path_with_increments(p, Scheme::euler_maruyama, grid, none);
  CHECK(r.status == PathStatus::aborted);
  CHECK(r.diagnostic.find("step") != std::string::npos);
}

TEST_CASE("record stride and observer") {
  auto p = brownian(std::numeric_limits<double>::infinity());
  RandomStream s(2, 0, StreamPurpose::noise);
  PathOptions o;
  o.record_stride = 3;
  int calls = 0, null_dw = 0;
  o.observer = [&](int, double, const State&, const NoiseVector* dw) {
    ++calls;
    null_dw += dw == nullptr;
  };
  const auto r = solve_path(p, Scheme::heun, TimeGrid::uniform(1.0, 10), s, o);
  CHECK(calls == 11);
  CHECK(null_dw == 1);
  REQUIRE(r.times.size() == 5u);
  CHECK(r.times[1] == doctest::Approx(0.3));
  CHECK(r.times.back() == doctest::Approx(1.0));
}

TEST_CASE("log-log slope") {
  const std::vector<double> dts{0.1, 0.05, 0.025};
  const std::vector<double> errs{2e-2, 5e-3, 1.25e-3};
  CHECK(fit_log_slope(dts, errs) == doctest::Approx(2.0).epsilon(1e-12));
  const std::vector<double> bad{1e-3, 0.0, 1e-4};
  CHECK_THROWS_AS(fit_log_slope(dts, bad), std::domain_error);
}

TEST_CASE("strong orders") {
  SUBCASE("Heun on dX = X o dW against exp(W_T)") {
    ConvergenceStudy st;
    st.scheme = Scheme::heun;
    st.coarsest_steps = 16;
    st.levels = 4;
    st.paths = 400;
    st.exact = [](const State& x0, const NoiseVector& w) { return State(x0 * std::exp(w[0])); };
    const auto r = strong_convergence_order(geometric(0.0, 1.0), st);
    CHECK(r.order > 0.5);
    CHECK(r.order < 1.3);
  }
  SUBCASE("Euler-Maruyama with additive noise") {
    SdeProblem p;
    p.drift = [](double, const State& x) { return State(-x.array().sin().matrix()); };
    p.diffusion = [](const State&, const NoiseVector& dw) { return State(0.5 * dw); };
    p.noise_variances = {1.0};
    p.initial = scalar(1.0);
    ConvergenceStudy st;
    st.coarsest_steps = 8;
    st.levels = 4;
    st.paths = 200;
    const auto r = strong_convergence_order(p, st);
    CHECK(r.order > 0.7);
    CHECK(r.order < 1.3);
  }
  SUBCASE("thread count does not change the estimate") {
    ConvergenceStudy st;
    st.scheme = Scheme::heun;
    st.paths = 40;
    st.exact = [](const State& x0, const NoiseVector& w) { return State(x0 * std::exp(w[0])); };
    const auto a = strong_convergence_order(geometric(0.0, 1.0), st);
    st.threads = 4;
    const auto b = strong_convergence_order(geometric(0.0, 1.0), st);
    CHECK(a.errors == b.errors);
  }
}
