#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace sel {

using Complex = std::complex<double>;

/// Integer wavevector on the 2-torus [0, 2pi)^2.
struct Wavevector {
  int x = 0;
  int y = 0;

  constexpr int norm2() const { return x * x + y * y; }
  constexpr Wavevector operator-() const { return {-x, -y}; }
  friend constexpr bool operator==(Wavevector, Wavevector) = default;
};

/// Point or vector in the plane; points are interpreted modulo 2pi.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr bool operator==(Vec2, Vec2) = default;
  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double a) const { return {a * x, a * y}; }
};

double norm(Vec2 v);
Vec2 wrap_to_torus(Vec2 p);

/// The truncated lattice {k in Z^2 : |k|_inf <= N}, stored row-major with
/// ky as the slow index.
class SpectralLattice {
 public:
  explicit SpectralLattice(int resolution);

  int resolution() const { return n_; }
  int side() const { return 2 * n_ + 1; }
  std::size_t size() const { return static_cast<std::size_t>(side()) * side(); }

  bool contains(Wavevector k) const;
  std::size_t index(Wavevector k) const;
  Wavevector wavevector(std::size_t i) const;

  friend bool operator==(const SpectralLattice&, const SpectralLattice&) = default;

 private:
  int n_;
};

/// Side length of the collocation grid used for quadratic products. Any
/// M >= 3N + 1 removes aliasing from products of two truncated fields.
int collocation_size(int resolution);

/// Collocation points x_ij = (2pi i / M, 2pi j / M), x-index fastest.
std::vector<Vec2> collocation_points(int resolution);

class ScalarSpectralField {
 public:
  explicit ScalarSpectralField(int resolution);

  const SpectralLattice& lattice() const { return lattice_; }
  int resolution() const { return lattice_.resolution(); }

  Complex& operator[](Wavevector k) { return coeffs_[lattice_.index(k)]; }
  const Complex& operator[](Wavevector k) const { return coeffs_[lattice_.index(k)]; }

  std::span<Complex> coeffs() { return coeffs_; }
  std::span<const Complex> coeffs() const { return coeffs_; }

 private:
  SpectralLattice lattice_;
  std::vector<Complex> coeffs_;
};

/// Truncated Fourier series u(x) = sum_k u_k e^{i k.x} of a planar vector
/// field with coefficients u_k = (1/4pi^2) int u e^{-i k.x}. With this
/// normalisation sum_k |u_k|^2 is the mean of |u|^2 over the torus.
///
/// The type stores any coefficient set; real, divergence-free fields are
/// the ones produced by the operations below, and `is_hermitian` /
/// `divergence_residual` check those properties.
class SpectralVelocityField {
 public:
  explicit SpectralVelocityField(int resolution);

  const SpectralLattice& lattice() const { return lattice_; }
  int resolution() const { return lattice_.resolution(); }
  std::size_t size() const { return lattice_.size(); }

  Complex& x(Wavevector k) { return ux_[lattice_.index(k)]; }
  Complex& y(Wavevector k) { return uy_[lattice_.index(k)]; }
  const Complex& x(Wavevector k) const { return ux_[lattice_.index(k)]; }
  const Complex& y(Wavevector k) const { return uy_[lattice_.index(k)]; }

  std::span<Complex> x_coeffs() { return ux_; }
  std::span<Complex> y_coeffs() { return uy_; }
  std::span<const Complex> x_coeffs() const { return ux_; }
  std::span<const Complex> y_coeffs() const { return uy_; }

  SpectralVelocityField& operator+=(const SpectralVelocityField& o);
  SpectralVelocityField& operator-=(const SpectralVelocityField& o);
  SpectralVelocityField& operator*=(double a);

 private:
  SpectralLattice lattice_;
  std::vector<Complex> ux_;
  std::vector<Complex> uy_;
};

SpectralVelocityField operator+(SpectralVelocityField a, const SpectralVelocityField& b);
SpectralVelocityField operator-(SpectralVelocityField a, const SpectralVelocityField& b);
SpectralVelocityField operator*(double s, SpectralVelocityField a);

/// Throws std::invalid_argument when the two resolutions differ.
void require_same_resolution(const SpectralLattice& a, const SpectralLattice& b);

// Construction helpers for real fields.

/// amplitude * cos(k.x) * direction, stored on the +k and -k coefficients.
SpectralVelocityField cosine_mode(int resolution, Wavevector k, Vec2 direction, double amplitude = 1.0);
/// amplitude * sin(k.x) * direction.
SpectralVelocityField sine_mode(int resolution, Wavevector k, Vec2 direction, double amplitude = 1.0);
/// u = amplitude * (sin x cos y, -cos x sin y).
SpectralVelocityField taylor_green(int resolution, double amplitude = 1.0);
/// Spatially constant field.
SpectralVelocityField constant_field(int resolution, Vec2 value);

// Inner products and norms (torus-averaged, i.e. coefficient l2).

double inner_product(const SpectralVelocityField& a, const SpectralVelocityField& b);
double l2_norm(const SpectralVelocityField& u);
double energy(const SpectralVelocityField& u);
/// sum_k |k|^2 |u_k|^2, the mean squared vorticity of a divergence-free field.
double enstrophy(const SpectralVelocityField& u);
/// (sum_k (1 + |k|^2)^s |u_k|^2)^{1/2}; throws for s < 0.
double sobolev_norm(const SpectralVelocityField& u, double s);
/// max_k |k . u_k|
double divergence_residual(const SpectralVelocityField& u);
/// divergence_residual / l2 coefficient norm, 0 for the zero field.
double relative_divergence_residual(const SpectralVelocityField& u);
bool is_hermitian(const SpectralVelocityField& u, double tol = 1e-12);

// Fourier multipliers.

/// Leray projection onto divergence-free fields; the k = 0 mode passes through.
SpectralVelocityField leray_project(const SpectralVelocityField& v);
/// The gradient part (I - Pi) v.
SpectralVelocityField gradient_part(const SpectralVelocityField& v);
SpectralVelocityField laplacian(const SpectralVelocityField& v);
/// Multiplication by 1 / (1 + alpha^2 |k|^2), i.e. (id - alpha^2 Delta)^{-1}.
SpectralVelocityField helmholtz_inverse(const SpectralVelocityField& v, double alpha);
/// Multiplication by 1 + alpha^2 |k|^2, i.e. (id - alpha^2 Delta).
SpectralVelocityField helmholtz_forward(const SpectralVelocityField& v, double alpha);
SpectralVelocityField gradient(const ScalarSpectralField& p);
/// d/dx (axis 0) or d/dy (axis 1) of each component.
SpectralVelocityField partial_derivative(const SpectralVelocityField& v, int axis);

// Pseudo-spectral quadratic terms, exact on the truncated lattice.

/// (u . grad) m
SpectralVelocityField directional_derivative(const SpectralVelocityField& u,
                                             const SpectralVelocityField& m);
/// (u . grad) u, not projected.
SpectralVelocityField advection_term(const SpectralVelocityField& u);
/// (grad u)^T w, component i = sum_j d_i u_j w_j.
SpectralVelocityField transpose_gradient_product(const SpectralVelocityField& u,
                                                 const SpectralVelocityField& w);

/// Zero-mean p with grad p = -(I - Pi)[(u . grad) u].
ScalarSpectralField pressure_from_velocity(const SpectralVelocityField& u);

// Physical-space access.

/// Direct trigonometric sum at each point; real part.
std::vector<Vec2> evaluate_at(const SpectralVelocityField& u, std::span<const Vec2> points);
std::vector<double> evaluate_at(const ScalarSpectralField& p, std::span<const Vec2> points);

/// Complex values on the collocation grid (x-index fastest).
struct GridVectorField {
  int size = 0;
  std::vector<Complex> x;
  std::vector<Complex> y;
};

GridVectorField to_grid(const SpectralVelocityField& u);
/// Forward transform and truncation to |k|_inf <= resolution.
SpectralVelocityField from_grid(const GridVectorField& g, int resolution);

}  // namespace sel
