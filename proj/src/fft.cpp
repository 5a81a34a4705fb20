#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace sel::detail {
namespace {

// FFTW planning is not thread-safe, execution with the new-array interface
// is. Plans are created once per grid size under a lock and never freed.
struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

const PlanPair& plans_for(int m) {
  static std::mutex mutex;
  static std::map<int, PlanPair> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;

  std::vector<Complex> in(static_cast<std::size_t>(m) * m), out(in.size());
  auto* pin = reinterpret_cast<fftw_complex*>(in.data());
  auto* pout = reinterpret_cast<fftw_complex*>(out.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.forward = fftw_plan_dft_2d(m, m, pin, pout, FFTW_FORWARD, flags);
  p.backward = fftw_plan_dft_2d(m, m, pin, pout, FFTW_BACKWARD, flags);
  if (p.forward == nullptr || p.backward == nullptr) throw std::runtime_error("fftw planning failed");
  return cache.emplace(m, p).first->second;
}

int wrap_index(int k, int m) { return k >= 0 ? k : k + m; }

}  // namespace

void lattice_to_grid(const SpectralLattice& lattice, std::span<const Complex> coeffs, int m,
                     std::span<Complex> grid) {
  const int n = lattice.resolution();
  if (m < 2 * n + 1) throw std::invalid_argument("collocation grid too small for lattice");
  std::vector<Complex> spectrum(static_cast<std::size_t>(m) * m, Complex{0.0, 0.0});
  for (int ky = -n; ky <= n; ++ky) {
    for (int kx = -n; kx <= n; ++kx) {
      spectrum[static_cast<std::size_t>(wrap_index(ky, m)) * m + wrap_index(kx, m)] =
          coeffs[lattice.index({kx, ky})];
    }
  }
  fftw_execute_dft(plans_for(m).backward, reinterpret_cast<fftw_complex*>(spectrum.data()),
                   reinterpret_cast<fftw_complex*>(grid.data()));
}

void grid_to_lattice(int m, std::span<const Complex> grid, const SpectralLattice& lattice,
                     std::span<Complex> coeffs) {
  const int n = lattice.resolution();
  if (m < 2 * n + 1) throw std::invalid_argument("collocation grid too small for lattice");
  std::vector<Complex> in(grid.begin(), grid.end());
  std::vector<Complex> spectrum(in.size());
  fftw_execute_dft(plans_for(m).forward, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(spectrum.data()));
  const double scale = 1.0 / (static_cast<double>(m) * m);
  for (int ky = -n; ky <= n; ++ky) {
    for (int kx = -n; kx <= n; ++kx) {
      coeffs[lattice.index({kx, ky})] =
          scale * spectrum[static_cast<std::size_t>(wrap_index(ky, m)) * m + wrap_index(kx, m)];
    }
  }
}

}  // namespace sel::detail
