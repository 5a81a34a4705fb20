#include "sel/spectral_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fft.hpp"

namespace sel {

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

Vec2 wrap_to_torus(Vec2 p) {
  constexpr double period = 2.0 * std::numbers::pi;
  auto wrap = [](double a) {
    double r = std::fmod(a, period);
    if (r < 0.0) r += period;
    // fmod of a tiny negative number can round up to the period itself
    return r >= period ? 0.0 : r;
  };
  return {wrap(p.x), wrap(p.y)};
}

SpectralLattice::SpectralLattice(int resolution) : n_(resolution) {
  if (resolution < 0) throw std::invalid_argument("lattice resolution must be non-negative");
}

bool SpectralLattice::contains(Wavevector k) const {
  return std::abs(k.x) <= n_ && std::abs(k.y) <= n_;
}

std::size_t SpectralLattice::index(Wavevector k) const {
  if (!contains(k)) {
    throw std::out_of_range("wavevector (" + std::to_string(k.x) + ", " + std::to_string(k.y) +
                            ") outside lattice of resolution " + std::to_string(n_));
  }
  return static_cast<std::size_t>(k.y + n_) * side() + (k.x + n_);
}

Wavevector SpectralLattice::wavevector(std::size_t i) const {
  const int s = side();
  return {static_cast<int>(i % s) - n_, static_cast<int>(i / s) - n_};
}

int collocation_size(int resolution) { return std::max(3 * resolution + 1, 4); }

std::vector<Vec2> collocation_points(int resolution) {
  const int m = collocation_size(resolution);
  const double h = 2.0 * std::numbers::pi / m;
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(m) * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) pts.push_back({i * h, j * h});
  return pts;
}

ScalarSpectralField::ScalarSpectralField(int resolution)
    : lattice_(resolution), coeffs_(lattice_.size()) {}

SpectralVelocityField::SpectralVelocityField(int resolution)
    : lattice_(resolution), ux_(lattice_.size()), uy_(lattice_.size()) {}

void require_same_resolution(const SpectralLattice& a, const SpectralLattice& b) {
  if (!(a == b)) {
    throw std::invalid_argument("resolution mismatch: " + std::to_string(a.resolution()) + " vs " +
                                std::to_string(b.resolution()));
  }
}

SpectralVelocityField& SpectralVelocityField::operator+=(const SpectralVelocityField& o) {
  require_same_resolution(lattice_, o.lattice_);
  for (std::size_t i = 0; i < ux_.size(); ++i) {
    ux_[i] += o.ux_[i];
    uy_[i] += o.uy_[i];
  }
  return *this;
}

SpectralVelocityField& SpectralVelocityField::operator-=(const SpectralVelocityField& o) {
  require_same_resolution(lattice_, o.lattice_);
  for (std::size_t i = 0; i < ux_.size(); ++i) {
    ux_[i] -= o.ux_[i];
    uy_[i] -= o.uy_[i];
  }
  return *this;
}

SpectralVelocityField& SpectralVelocityField::operator*=(double a) {
  for (std::size_t i = 0; i < ux_.size(); ++i) {
    ux_[i] *= a;
    uy_[i] *= a;
  }
  return *this;
}

SpectralVelocityField operator+(SpectralVelocityField a, const SpectralVelocityField& b) {
  a += b;
  return a;
}

SpectralVelocityField operator-(SpectralVelocityField a, const SpectralVelocityField& b) {
  a -= b;
  return a;
}

SpectralVelocityField operator*(double s, SpectralVelocityField a) {
  a *= s;
  return a;
}

SpectralVelocityField cosine_mode(int resolution, Wavevector k, Vec2 direction, double amplitude) {
  SpectralVelocityField u(resolution);
  if (k == Wavevector{}) {
    u.x(k) += amplitude * direction.x;
    u.y(k) += amplitude * direction.y;
    return u;
  }
  const double h = 0.5 * amplitude;
  u.x(k) += h * direction.x;
  u.y(k) += h * direction.y;
  u.x(-k) += h * direction.x;
  u.y(-k) += h * direction.y;
  return u;
}

SpectralVelocityField sine_mode(int resolution, Wavevector k, Vec2 direction, double amplitude) {
  SpectralVelocityField u(resolution);
  if (k == Wavevector{}) {
    (void)u.lattice().index(k);
    return u;
  }
  const Complex c{0.0, -0.5 * amplitude};
  u.x(k) += c * direction.x;
  u.y(k) += c * direction.y;
  u.x(-k) += std::conj(c) * direction.x;
  u.y(-k) += std::conj(c) * direction.y;
  return u;
}

SpectralVelocityField taylor_green(int resolution, double amplitude) {
  // sin x cos y = (sin(x+y) + sin(x-y)) / 2, -cos x sin y = (sin(x-y) - sin(x+y)) / 2
  return sine_mode(resolution, {1, 1}, {1.0, -1.0}, 0.5 * amplitude) +
         sine_mode(resolution, {1, -1}, {1.0, 1.0}, 0.5 * amplitude);
}

SpectralVelocityField constant_field(int resolution, Vec2 value) {
  SpectralVelocityField u(resolution);
  u.x({0, 0}) = value.x;
  u.y({0, 0}) = value.y;
  return u;
}

double inner_product(const SpectralVelocityField& a, const SpectralVelocityField& b) {
  require_same_resolution(a.lattice(), b.lattice());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += (std::conj(a.x_coeffs()[i]) * b.x_coeffs()[i]).real();
    s += (std::conj(a.y_coeffs()[i]) * b.y_coeffs()[i]).real();
  }
  return s;
}

namespace {

// Weighted coefficient sum sum_k w(k) (|u_x(k)|^2 + |u_y(k)|^2).
template <class Weight>
double weighted_sum(const SpectralVelocityField& u, Weight w) {
  double s = 0.0;
  const auto& lat = u.lattice();
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += w(lat.wavevector(i)) * (std::norm(u.x_coeffs()[i]) + std::norm(u.y_coeffs()[i]));
  }
  return s;
}

}  // namespace

double energy(const SpectralVelocityField& u) {
  return weighted_sum(u, [](Wavevector) { return 1.0; });
}

double l2_norm(const SpectralVelocityField& u) { return std::sqrt(energy(u)); }

double enstrophy(const SpectralVelocityField& u) {
  return weighted_sum(u, [](Wavevector k) { return static_cast<double>(k.norm2()); });
}

double sobolev_norm(const SpectralVelocityField& u, double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("Sobolev index must be non-negative");
  return std::sqrt(weighted_sum(u, [s](Wavevector k) { return std::pow(1.0 + k.norm2(), s); }));
}

double divergence_residual(const SpectralVelocityField& u) {
  double r = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Wavevector k = u.lattice().wavevector(i);
    r = std::max(r, std::abs(double(k.x) * u.x_coeffs()[i] + double(k.y) * u.y_coeffs()[i]));
  }
  return r;
}

double relative_divergence_residual(const SpectralVelocityField& u) {
  const double n = l2_norm(u);
  return n > 0.0 ? divergence_residual(u) / n : 0.0;
}

bool is_hermitian(const SpectralVelocityField& u, double tol) {
  double scale = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    scale = std::max({scale, std::abs(u.x_coeffs()[i]), std::abs(u.y_coeffs()[i])});
  const double bound = tol * std::max(1.0, scale);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Wavevector k = u.lattice().wavevector(i);
    if (std::abs(u.x(-k) - std::conj(u.x(k))) > bound) return false;
    if (std::abs(u.y(-k) - std::conj(u.y(k))) > bound) return false;
  }
  return true;
}

namespace {

template <class Multiplier>
SpectralVelocityField apply_scalar_multiplier(const SpectralVelocityField& v, Multiplier mult) {
  SpectralVelocityField out(v.resolution());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double m = mult(v.lattice().wavevector(i));
    out.x_coeffs()[i] = m * v.x_coeffs()[i];
    out.y_coeffs()[i] = m * v.y_coeffs()[i];
  }
  return out;
}

}  // namespace

SpectralVelocityField leray_project(const SpectralVelocityField& v) {
  SpectralVelocityField out(v.resolution());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Wavevector k = v.lattice().wavevector(i);
    const Complex cx = v.x_coeffs()[i];
    const Complex cy = v.y_coeffs()[i];
    if (k.norm2() == 0) {
      out.x_coeffs()[i] = cx;
      out.y_coeffs()[i] = cy;
      continue;
    }
    const Complex along = (double(k.x) * cx + double(k.y) * cy) / double(k.norm2());
    out.x_coeffs()[i] = cx - double(k.x) * along;
    out.y_coeffs()[i] = cy - double(k.y) * along;
  }
  return out;
}

SpectralVelocityField gradient_part(const SpectralVelocityField& v) {
  SpectralVelocityField out(v.resolution());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Wavevector k = v.lattice().wavevector(i);
    if (k.norm2() == 0) continue;
    const Complex along =
        (double(k.x) * v.x_coeffs()[i] + double(k.y) * v.y_coeffs()[i]) / double(k.norm2());
    out.x_coeffs()[i] = double(k.x) * along;
    out.y_coeffs()[i] = double(k.y) * along;
  }
  return out;
}

SpectralVelocityField laplacian(const SpectralVelocityField& v) {
  return apply_scalar_multiplier(v, [](Wavevector k) { return -double(k.norm2()); });
}

SpectralVelocityField helmholtz_inverse(const SpectralVelocityField& v, double alpha) {
  const double a2 = alpha * alpha;
  return apply_scalar_multiplier(v, [a2](Wavevector k) { return 1.0 / (1.0 + a2 * k.norm2()); });
}

SpectralVelocityField helmholtz_forward(const SpectralVelocityField& v, double alpha) {
  const double a2 = alpha * alpha;
  return apply_scalar_multiplier(v, [a2](Wavevector k) { return 1.0 + a2 * k.norm2(); });
}

SpectralVelocityField gradient(const ScalarSpectralField& p) {
  SpectralVelocityField out(p.resolution());
  for (std::size_t i = 0; i < p.lattice().size(); ++i) {
    const Wavevector k = p.lattice().wavevector(i);
    const Complex c = Complex{0.0, 1.0} * p.coeffs()[i];
    out.x_coeffs()[i] = double(k.x) * c;
    out.y_coeffs()[i] = double(k.y) * c;
  }
  return out;
}

SpectralVelocityField partial_derivative(const SpectralVelocityField& v, int axis) {
  if (axis != 0 && axis != 1) throw std::invalid_argument("axis must be 0 or 1");
  SpectralVelocityField out(v.resolution());
  for (std::size_t i = 0; i < v.lattice().size(); ++i) {
    const Wavevector k = v.lattice().wavevector(i);
    const Complex ik{0.0, double(axis == 0 ? k.x : k.y)};
    out.x_coeffs()[i] = ik * v.x_coeffs()[i];
    out.y_coeffs()[i] = ik * v.y_coeffs()[i];
  }
  return out;
}

namespace {

enum class Axis { x, y };

std::vector<Complex> grid_values(const SpectralLattice& lat, std::span<const Complex> coeffs,
                                 int m) {
  std::vector<Complex> g(static_cast<std::size_t>(m) * m);
  detail::lattice_to_grid(lat, coeffs, m, g);
  return g;
}

std::vector<Complex> derivative_grid(const SpectralLattice& lat, std::span<const Complex> coeffs,
                                     Axis axis, int m) {
  std::vector<Complex> d(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const Wavevector k = lat.wavevector(i);
    d[i] = Complex{0.0, double(axis == Axis::x ? k.x : k.y)} * coeffs[i];
  }
  return grid_values(lat, d, m);
}

}  // namespace

SpectralVelocityField directional_derivative(const SpectralVelocityField& u,
                                             const SpectralVelocityField& w) {
  require_same_resolution(u.lattice(), w.lattice());
  const auto& lat = u.lattice();
  const int m = collocation_size(u.resolution());
  const auto ux = grid_values(lat, u.x_coeffs(), m);
  const auto uy = grid_values(lat, u.y_coeffs(), m);
  const auto wx_x = derivative_grid(lat, w.x_coeffs(), Axis::x, m);
  const auto wx_y = derivative_grid(lat, w.x_coeffs(), Axis::y, m);
  const auto wy_x = derivative_grid(lat, w.y_coeffs(), Axis::x, m);
  const auto wy_y = derivative_grid(lat, w.y_coeffs(), Axis::y, m);

  std::vector<Complex> ax(ux.size()), ay(ux.size());
  for (std::size_t i = 0; i < ux.size(); ++i) {
    ax[i] = ux[i] * wx_x[i] + uy[i] * wx_y[i];
    ay[i] = ux[i] * wy_x[i] + uy[i] * wy_y[i];
  }
  SpectralVelocityField out(u.resolution());
  detail::grid_to_lattice(m, ax, lat, out.x_coeffs());
  detail::grid_to_lattice(m, ay, lat, out.y_coeffs());
  return out;
}

SpectralVelocityField advection_term(const SpectralVelocityField& u) {
  return directional_derivative(u, u);
}

SpectralVelocityField transpose_gradient_product(const SpectralVelocityField& u,
                                                 const SpectralVelocityField& w) {
  require_same_resolution(u.lattice(), w.lattice());
  const auto& lat = u.lattice();
  const int m = collocation_size(u.resolution());
  const auto wx = grid_values(lat, w.x_coeffs(), m);
  const auto wy = grid_values(lat, w.y_coeffs(), m);
  const auto ux_x = derivative_grid(lat, u.x_coeffs(), Axis::x, m);
  const auto ux_y = derivative_grid(lat, u.x_coeffs(), Axis::y, m);
  const auto uy_x = derivative_grid(lat, u.y_coeffs(), Axis::x, m);
  const auto uy_y = derivative_grid(lat, u.y_coeffs(), Axis::y, m);

  std::vector<Complex> ax(wx.size()), ay(wx.size());
  for (std::size_t i = 0; i < wx.size(); ++i) {
    ax[i] = ux_x[i] * wx[i] + uy_x[i] * wy[i];
    ay[i] = ux_y[i] * wx[i] + uy_y[i] * wy[i];
  }
  SpectralVelocityField out(u.resolution());
  detail::grid_to_lattice(m, ax, lat, out.x_coeffs());
  detail::grid_to_lattice(m, ay, lat, out.y_coeffs());
  return out;
}

ScalarSpectralField pressure_from_velocity(const SpectralVelocityField& u) {
  const auto a = advection_term(u);
  ScalarSpectralField p(u.resolution());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Wavevector k = a.lattice().wavevector(i);
    if (k.norm2() == 0) continue;
    const Complex ka = double(k.x) * a.x_coeffs()[i] + double(k.y) * a.y_coeffs()[i];
    p.coeffs()[i] = Complex{0.0, 1.0} * ka / double(k.norm2());
  }
  return p;
}

namespace {

// e^{i j theta} for j = -n..n
void fill_phases(double theta, int n, std::vector<Complex>& out) {
  out.resize(2 * n + 1);
  for (int j = -n; j <= n; ++j) out[j + n] = std::polar(1.0, j * theta);
}

Complex trig_sum(const SpectralLattice& lat, std::span<const Complex> c,
                 const std::vector<Complex>& ex, const std::vector<Complex>& ey) {
  const int s = lat.side();
  Complex total{0.0, 0.0};
  for (int row = 0; row < s; ++row) {
    Complex acc{0.0, 0.0};
    const Complex* line = c.data() + static_cast<std::size_t>(row) * s;
    for (int col = 0; col < s; ++col) acc += line[col] * ex[col];
    total += ey[row] * acc;
  }
  return total;
}

}  // namespace

std::vector<Vec2> evaluate_at(const SpectralVelocityField& u, std::span<const Vec2> points) {
  std::vector<Vec2> out;
  out.reserve(points.size());
  std::vector<Complex> ex, ey;
  const int n = u.resolution();
  for (const Vec2 p : points) {
    fill_phases(p.x, n, ex);
    fill_phases(p.y, n, ey);
    out.push_back({trig_sum(u.lattice(), u.x_coeffs(), ex, ey).real(),
                   trig_sum(u.lattice(), u.y_coeffs(), ex, ey).real()});
  }
  return out;
}

std::vector<double> evaluate_at(const ScalarSpectralField& p, std::span<const Vec2> points) {
  std::vector<double> out;
  out.reserve(points.size());
  std::vector<Complex> ex, ey;
  const int n = p.resolution();
  for (const Vec2 q : points) {
    fill_phases(q.x, n, ex);
    fill_phases(q.y, n, ey);
    out.push_back(trig_sum(p.lattice(), p.coeffs(), ex, ey).real());
  }
  return out;
}

GridVectorField to_grid(const SpectralVelocityField& u) {
  GridVectorField g;
  g.size = collocation_size(u.resolution());
  g.x = grid_values(u.lattice(), u.x_coeffs(), g.size);
  g.y = grid_values(u.lattice(), u.y_coeffs(), g.size);
  return g;
}

SpectralVelocityField from_grid(const GridVectorField& g, int resolution) {
  SpectralVelocityField out(resolution);
  const std::size_t expected = static_cast<std::size_t>(g.size) * g.size;
  if (g.x.size() != expected || g.y.size() != expected)
    throw std::invalid_argument("grid field storage does not match its size");
  detail::grid_to_lattice(g.size, g.x, out.lattice(), out.x_coeffs());
  detail::grid_to_lattice(g.size, g.y, out.lattice(), out.y_coeffs());
  return out;
}

}  // namespace sel
