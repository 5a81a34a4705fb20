#include "sel/qwiener.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sel {

Vec2 NoiseMode::direction() const {
  const double len = std::sqrt(static_cast<double>(k.norm2()));
  return {-k.y / len, k.x / len};
}

QWienerSpec::QWienerSpec(int resolution, std::vector<NoiseMode> modes, double gamma, double amplitude,
                         int target_regularity)
    : resolution_(resolution),
      modes_(std::move(modes)),
      gamma_(gamma),
      amplitude_(amplitude),
      target_regularity_(target_regularity) {
  const SpectralLattice lattice(resolution);
  for (const auto& m : modes_) {
    if (m.k.norm2() == 0 || !lattice.contains(m.k))
      throw std::invalid_argument("noise mode outside the truncated lattice");
    if (!(m.eigenvalue >= 0.0)) throw std::invalid_argument("noise eigenvalues must be non-negative");
  }
}

std::vector<double> QWienerSpec::eigenvalues() const {
  std::vector<double> out;
  out.reserve(modes_.size());
  for (const auto& m : modes_) out.push_back(m.eigenvalue);
  return out;
}

double QWienerSpec::trace() const {
  double t = 0.0;
  for (const auto& m : modes_) t += m.eigenvalue;
  return t;
}

double QWienerSpec::regularity_budget() const {
  double b = 0.0;
  for (const auto& m : modes_) b += m.eigenvalue * std::pow(1.0 + m.k.norm2(), target_regularity_);
  return b;
}

bool QWienerSpec::converges_in_limit() const {
  return 2.0 * gamma_ - 2.0 * target_regularity_ > 2.0;
}

namespace {

// Adds a * e_mode to u.
void accumulate_mode(SpectralVelocityField& u, const NoiseMode& mode, double a) {
  const Vec2 d = mode.direction();
  const double h = a * std::numbers::sqrt2 / 2.0;
  // sqrt2 cos = (sqrt2/2)(e^{ikx} + e^{-ikx}), sqrt2 sin = (sqrt2/2i)(e^{ikx} - e^{-ikx})
  const Complex plus = mode.parity == ModeParity::cosine ? Complex{h, 0.0} : Complex{0.0, -h};
  const Complex minus = std::conj(plus);
  u.x(mode.k) += plus * d.x;
  u.y(mode.k) += plus * d.y;
  u.x(-mode.k) += minus * d.x;
  u.y(-mode.k) += minus * d.y;
}

}  // namespace

SpectralVelocityField QWienerSpec::eigenfunction(std::size_t j) const {
  SpectralVelocityField e(resolution_);
  accumulate_mode(e, modes_.at(j), 1.0);
  return e;
}

SpectralVelocityField QWienerSpec::field_from_coordinates(std::span<const double> coords) const {
  if (coords.size() != modes_.size()) throw std::invalid_argument("noise coordinate count mismatch");
  SpectralVelocityField u(resolution_);
  for (std::size_t j = 0; j < modes_.size(); ++j) {
    if (coords[j] != 0.0) accumulate_mode(u, modes_[j], coords[j]);
  }
  return u;
}

std::vector<double> QWienerSpec::coordinates_of(const SpectralVelocityField& field) const {
  require_same_resolution(field.lattice(), SpectralLattice(resolution_));
  std::vector<double> out(modes_.size());
  for (std::size_t j = 0; j < modes_.size(); ++j) {
    const auto& m = modes_[j];
    const Vec2 d = m.direction();
    const double h = std::numbers::sqrt2 / 2.0;
    const Complex plus = m.parity == ModeParity::cosine ? Complex{h, 0.0} : Complex{0.0, -h};
    const Complex minus = std::conj(plus);
    Complex s = std::conj(plus) * (d.x * field.x(m.k) + d.y * field.y(m.k));
    s += std::conj(minus) * (d.x * field.x(-m.k) + d.y * field.y(-m.k));
    out[j] = s.real();
  }
  return out;
}

QWienerSpec build_spectrum(int resolution, double gamma, double amplitude, int target_regularity) {
  if (resolution <= 0) throw std::invalid_argument("noise resolution N must be positive");
  if (!(amplitude >= 0.0)) throw std::invalid_argument("noise amplitude c must be non-negative");
  std::vector<NoiseMode> modes;
  for (int ky = 0; ky <= resolution; ++ky) {
    for (int kx = -resolution; kx <= resolution; ++kx) {
      if (ky == 0 && kx <= 0) continue;  // one representative of each +-k pair
      const Wavevector k{kx, ky};
      const double lambda = amplitude * std::pow(1.0 + k.norm2(), -gamma);
      modes.push_back({k, ModeParity::cosine, lambda});
      modes.push_back({k, ModeParity::sine, lambda});
    }
  }
  return QWienerSpec(resolution, std::move(modes), gamma, amplitude, target_regularity);
}

NoiseIncrement sample_increment(const QWienerSpec& spec, double dt, RandomStream& stream,
                                bool keep_gaussians) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  auto xi = standard_normals(spec.size(), stream);
  std::vector<double> coords(xi.size());
  const auto modes = spec.modes();
  for (std::size_t j = 0; j < xi.size(); ++j) coords[j] = std::sqrt(modes[j].eigenvalue * dt) * xi[j];
  NoiseIncrement inc{dt, spec.field_from_coordinates(coords), {}};
  if (keep_gaussians) inc.gaussians = std::move(xi);
  return inc;
}

double l2q_norm(const NoiseOperator& a, const QWienerSpec& spec) {
  double s = 0.0;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    const double lambda = spec.modes()[j].eigenvalue;
    if (lambda == 0.0) continue;
    s += lambda * energy(a(spec.eigenfunction(j)));
  }
  return std::sqrt(s);
}

}  // namespace sel
