#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace sel {

/// Tag separating the independent streams derived from one master seed.
enum class StreamPurpose : std::uint64_t {
  noise = 1,
  initial_condition = 2,
  refinement = 3,
  statistics = 4,
};

/// Counter-based generator: the n-th output is splitmix64(key + n * golden),
/// with the key derived from (master seed, trajectory index, purpose). Two
/// streams with different derivation triples never share state, so ensemble
/// results do not depend on the order in which trajectories are scheduled.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t master_seed, std::uint64_t index, StreamPurpose purpose);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  double normal() { return normal_(*this); }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_;
};

std::uint64_t derive_stream_key(std::uint64_t master_seed, std::uint64_t index, StreamPurpose purpose);

/// count independent standard normals, drawn in order.
std::vector<double> standard_normals(std::size_t count, RandomStream& stream);

/// Centred Gaussian vector with independent coordinates of variance
/// variances[j] * dt.
std::vector<double> gaussian_increment(std::span<const double> variances, double dt,
                                       RandomStream& stream);

}  // namespace sel
