#include <doctest.h>

#include <cmath>

#include "sel/qwiener.hpp"
#include "sel/random.hpp"

using namespace sel;

TEST_CASE("random streams are keyed by seed, index and purpose") {
  RandomStream a(42, 3, StreamPurpose::noise), b(42, 3, StreamPurpose::noise);
  RandomStream c(42, 4, StreamPurpose::noise), d(42, 3, StreamPurpose::refinement);
  const auto first = a();
  CHECK(first == b());
  CHECK(first != c());
  CHECK(first != d());
  CHECK(a.key() == derive_stream_key(42, 3, StreamPurpose::noise));
  CHECK(a.key() != derive_stream_key(43, 3, StreamPurpose::noise));

  RandomStream e(1, 0, StreamPurpose::statistics), f(1, 0, StreamPurpose::statistics);
  const auto x = standard_normals(5, e);
  CHECK(x == standard_normals(5, f));
}

TEST_CASE("standard normals have the right low moments") {
  RandomStream s(7, 0, StreamPurpose::statistics);
  const auto x = standard_normals(200000, s);
  double m1 = 0, m2 = 0;
  for (double v : x) {
    m1 += v;
    m2 += v * v;
  }
  const double n = static_cast<double>(x.size());
  CHECK(std::abs(m1 / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(m2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("gaussian increments") {
  RandomStream s(1, 0, StreamPurpose::noise);
  const std::vector<double> var{1.0, 0.0, 4.0};
  CHECK_THROWS_AS(gaussian_increment(var, 0.0, s), std::invalid_argument);
  const auto g = gaussian_increment(var, 0.25, s);
  CHECK(g[1] == 0.0);
  RandomStream t(1, 0, StreamPurpose::noise);
  const auto xi = standard_normals(3, t);
  CHECK(g[0] == doctest::Approx(0.5 * xi[0]).epsilon(1e-15));
  CHECK(g[2] == doctest::Approx(1.0 * xi[2]).epsilon(1e-15));
}

TEST_CASE("power-law spectrum") {
  const auto spec = build_spectrum(2, 2.0, 0.5, 0);
  CHECK(spec.size() == 24u);
  double trace = 0.0;
  for (const auto& m : spec.modes()) {
    CHECK(m.eigenvalue == doctest::Approx(0.5 * std::pow(1.0 + m.k.norm2(), -2.0)).epsilon(1e-15));
    trace += m.eigenvalue;
    // half lattice: k_y > 0, or k_y = 0 and k_x > 0
    CHECK((m.k.y > 0 || (m.k.y == 0 && m.k.x > 0)));
  }
  CHECK(spec.trace() == doctest::Approx(trace).epsilon(1e-14));
  CHECK(spec.converges_in_limit());
  CHECK_FALSE(build_spectrum(2, 1.0, 1.0, 0).converges_in_limit());
  CHECK_FALSE(build_spectrum(2, 2.0, 1.0, 1).converges_in_limit());

  double budget = 0.0;
  const auto s1 = build_spectrum(3, 3.0, 1.0, 1);
  for (const auto& m : s1.modes()) budget += m.eigenvalue * (1.0 + m.k.norm2());
  CHECK(s1.regularity_budget() == doctest::Approx(budget).epsilon(1e-14));

  CHECK_THROWS_AS(build_spectrum(0, 2.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_spectrum(2, 2.0, -1.0, 0), std::invalid_argument);
}

TEST_CASE("eigenfunctions are orthonormal, real and divergence free") {
  const auto spec = build_spectrum(3, 1.0, 1.0, 0);
  std::vector<SpectralVelocityField> e;
  for (std::size_t j = 0; j < spec.size(); ++j) e.push_back(spec.eigenfunction(j));
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(is_hermitian(e[i]));
    CHECK(divergence_residual(e[i]) < 1e-15);
    for (std::size_t j = i; j < e.size(); ++j)
      CHECK(inner_product(e[i], e[j]) == doctest::Approx(i == j ? 1.0 : 0.0).scale(1).epsilon(1e-14));
  }
  // the cosine member of k = (1, 0) is sqrt(2) cos(x) (0, 1)
  for (std::size_t j = 0; j < spec.size(); ++j) {
    const auto& m = spec.modes()[j];
    if (m.k == Wavevector{1, 0} && m.parity == ModeParity::cosine) {
      const Vec2 p{0.4, 1.1};
      const Vec2 v = evaluate_at(e[j], std::span<const Vec2>(&p, 1))[0];
      CHECK(v.x == doctest::Approx(0.0).scale(1));
      CHECK(v.y == doctest::Approx(std::sqrt(2.0) * std::cos(0.4)).epsilon(1e-13));
    }
  }
}

TEST_CASE("coordinates round-trip") {
  const auto spec = build_spectrum(3, 2.0, 1.0, 0);
  std::vector<double> c(spec.size());
  for (std::size_t j = 0; j < c.size(); ++j) c[j] = std::sin(1.0 + j);
  const auto f = spec.field_from_coordinates(c);
  const auto back = spec.coordinates_of(f);
  for (std::size_t j = 0; j < c.size(); ++j) CHECK(back[j] == doctest::Approx(c[j]).scale(1).epsilon(1e-14));
  double sq = 0.0;
  for (double v : c) sq += v * v;
  CHECK(energy(f) == doctest::Approx(sq).epsilon(1e-13));
}

TEST_CASE("increments reuse the gaussian_increment stream bit for bit") {
  const auto spec = build_spectrum(2, 2.0, 0.3, 0);
  RandomStream a(5, 2, StreamPurpose::noise), b(5, 2, StreamPurpose::noise);
  const auto inc = sample_increment(spec, 0.01, a, true);
  const auto g = gaussian_increment(spec.eigenvalues(), 0.01, b);
  const auto coords = spec.coordinates_of(inc.field);
  CHECK(inc.gaussians.size() == spec.size());
  for (std::size_t j = 0; j < g.size(); ++j) CHECK(coords[j] == doctest::Approx(g[j]).scale(1).epsilon(1e-14));
  CHECK(divergence_residual(inc.field) < 1e-15);
}

TEST_CASE("increment covariance: Monte Carlo against lambda dt") {
  const auto spec = build_spectrum(1, 1.0, 2.0, 0);
  const auto lambda = spec.eigenvalues();
  const double dt = 0.05;
  const int n = 20000;
  std::vector<double> sq(spec.size(), 0.0);
  double cross01 = 0.0;
  for (int i = 0; i < n; ++i) {
    RandomStream s(9, static_cast<std::uint64_t>(i), StreamPurpose::noise);
    const auto inc = sample_increment(spec, dt, s, true);
    const auto c = spec.coordinates_of(inc.field);
    for (std::size_t j = 0; j < c.size(); ++j) sq[j] += c[j] * c[j];
    cross01 += c[0] * c[1];
  }
  for (std::size_t j = 0; j < sq.size(); ++j) {
    const double z = (sq[j] / n - lambda[j] * dt) / (std::sqrt(2.0 / n) * lambda[j] * dt);
    CHECK(std::abs(z) < 4.0);
  }
  CHECK(std::abs(cross01 / n / (std::sqrt(lambda[0] * lambda[1]) * dt)) * std::sqrt(double(n)) < 4.0);
}

TEST_CASE("L2,Q norm") {
  const auto spec = build_spectrum(3, 2.0, 0.7, 0);
  const NoiseOperator id = [](const SpectralVelocityField& w) { return w; };
  CHECK(l2q_norm(id, spec) == doctest::Approx(std::sqrt(spec.trace())).epsilon(1e-13));
  const NoiseOperator twice = [](const SpectralVelocityField& w) { return 2.0 * w; };
  CHECK(l2q_norm(twice, spec) == doctest::Approx(2.0 * std::sqrt(spec.trace())).epsilon(1e-13));
  const NoiseOperator h = [](const SpectralVelocityField& w) { return helmholtz_inverse(w, 1.0); };
  double want = 0.0;
  for (const auto& m : spec.modes()) want += m.eigenvalue / std::pow(1.0 + m.k.norm2(), 2.0);
  CHECK(l2q_norm(h, spec) == doctest::Approx(std::sqrt(want)).epsilon(1e-13));
}
