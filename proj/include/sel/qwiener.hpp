#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sel/random.hpp"
#include "sel/spectral_field.hpp"

namespace sel {

enum class ModeParity { cosine, sine };

/// One eigenpair of the noise covariance: lambda and the unit field
/// sqrt(2) {cos, sin}(k.x) k_perp / |k|.
struct NoiseMode {
  Wavevector k;
  ModeParity parity = ModeParity::cosine;
  double eigenvalue = 0.0;

  /// k_perp / |k| with k_perp = (-k_y, k_x).
  Vec2 direction() const;
};

/// Covariance operator Q of a Q-Wiener process on divergence-free fields,
/// given by its eigenpairs. Immutable once built.
class QWienerSpec {
 public:
  QWienerSpec(int resolution, std::vector<NoiseMode> modes, double gamma, double amplitude,
              int target_regularity);

  int resolution() const { return resolution_; }
  std::size_t size() const { return modes_.size(); }
  std::span<const NoiseMode> modes() const { return modes_; }
  std::vector<double> eigenvalues() const;

  double gamma() const { return gamma_; }
  double amplitude() const { return amplitude_; }
  int target_regularity() const { return target_regularity_; }

  double trace() const;
  /// sum_k lambda_k (1 + |k|^2)^{s'}: finite at any truncation, the proxy
  /// for the noise taking values in H^{s'}.
  double regularity_budget() const;
  /// Whether the budget stays bounded as the truncation is removed
  /// (2 gamma - 2 s' > 2 for the power-law spectrum).
  bool converges_in_limit() const;

  SpectralVelocityField eigenfunction(std::size_t j) const;
  /// sum_j coords[j] e_j
  SpectralVelocityField field_from_coordinates(std::span<const double> coords) const;
  /// <field, e_j> for every j
  std::vector<double> coordinates_of(const SpectralVelocityField& field) const;

 private:
  int resolution_;
  std::vector<NoiseMode> modes_;
  double gamma_;
  double amplitude_;
  int target_regularity_;
};

/// lambda_k = c (1 + |k|^2)^{-gamma} on every real divergence-free Fourier
/// mode with 0 < |k|_inf <= N. Throws for N <= 0 or c < 0.
QWienerSpec build_spectrum(int resolution, double gamma, double amplitude, int target_regularity);

struct NoiseIncrement {
  double dt = 0.0;
  SpectralVelocityField field;
  /// The generating standard normals, kept only when requested.
  std::vector<double> gaussians;
};

/// sum_j sqrt(lambda_j dt) xi_j e_j with xi_j drawn in mode order.
NoiseIncrement sample_increment(const QWienerSpec& spec, double dt, RandomStream& stream,
                                bool keep_gaussians = false);

/// A linear map on noise fields, known through its action on eigenmodes.
using NoiseOperator = std::function<SpectralVelocityField(const SpectralVelocityField&)>;

/// (sum_j lambda_j ||A e_j||^2)^{1/2}
double l2q_norm(const NoiseOperator& a, const QWienerSpec& spec);

}  // namespace sel
