#include "sel/random.hpp"

#include <cmath>
#include <stdexcept>

namespace sel {
namespace {

constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_stream_key(std::uint64_t master_seed, std::uint64_t index, StreamPurpose purpose) {
  std::uint64_t k = mix64(master_seed + golden);
  k = mix64(k ^ (index * golden + 0x632BE59BD9B4E019ULL));
  k = mix64(k ^ (static_cast<std::uint64_t>(purpose) * 0xD1B54A32D192ED03ULL));
  return k;
}

RandomStream::RandomStream(std::uint64_t master_seed, std::uint64_t index, StreamPurpose purpose)
    : key_(derive_stream_key(master_seed, index, purpose)) {}

RandomStream::result_type RandomStream::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * golden);
}

std::vector<double> standard_normals(std::size_t count, RandomStream& stream) {
  std::vector<double> xi(count);
  for (auto& v : xi) v = stream.normal();
  return xi;
}

std::vector<double> gaussian_increment(std::span<const double> variances, double dt,
                                       RandomStream& stream) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  std::vector<double> out(variances.size());
  for (std::size_t j = 0; j < variances.size(); ++j) out[j] = std::sqrt(variances[j] * dt) * stream.normal();
  return out;
}

}  // namespace sel
