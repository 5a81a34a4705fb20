#pragma once

#include <span>

#include "sel/spectral_field.hpp"

namespace sel::detail {

// Zero-padded inverse transform of lattice coefficients onto an m x m grid:
// grid(x_j) = sum_k c_k e^{i k.x_j}. Requires m >= 2N + 1.
void lattice_to_grid(const SpectralLattice& lattice, std::span<const Complex> coeffs, int m,
                     std::span<Complex> grid);

// Forward transform, normalised by 1/m^2, truncated to the lattice.
void grid_to_lattice(int m, std::span<const Complex> grid, const SpectralLattice& lattice,
                     std::span<Complex> coeffs);

}  // namespace sel::detail
