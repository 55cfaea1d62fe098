#pragma once

#include <array>
#include <cstdint>
#include <tuple>

namespace odts {

// Hard guard on Poisson rates: beyond this, exactness of the samplers (and of
// the truncated-sum checkers) is not maintained, so callers treat it as
// divergence evidence instead of drawing.
inline constexpr double kMaxPoissonRate = 1e12;

// Deterministic, splittable random stream. Identical (seed, stream_id) pairs
// produce bit-identical output on every host; distinct stream_ids give
// statistically independent streams (xoshiro256++ state derived through
// splitmix64 from both words).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1), 53-bit resolution.
  double next_double();

  // Exact Poisson(lambda) draw: sequential inversion below rate 10,
  // Hormann's PTRS transformed rejection above. lambda == 0 returns 0
  // without consuming randomness.
  long long poisson(double lambda);

  // Poisson-thinning coupled pair: the min-rate coordinate is Poisson(min),
  // the other adds an independent Poisson(|lambda1-lambda2|) increment V,
  // and the coin is 1{V == 0}. Marginals are exactly Poisson(lambda1) and
  // Poisson(lambda2); P(coin = 1) = exp(-|lambda1 - lambda2|).
  std::tuple<long long, long long, int> coupled_poisson(double lambda1,
                                                        double lambda2);

  // Exact N(0, variance) draw (Box-Muller, two uniforms per call).
  double gaussian(double variance);

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
};

// Composes a stream id from a purpose tag and two indices so that parallel
// workers never share a stream.
std::uint64_t derive_stream_id(std::uint64_t purpose, std::uint64_t a = 0,
                               std::uint64_t b = 0);

namespace stream_purpose {
inline constexpr std::uint64_t trajectory = 1;
inline constexpr std::uint64_t fit_starts = 2;
inline constexpr std::uint64_t verify_mc = 3;
inline constexpr std::uint64_t verify_moment = 4;
inline constexpr std::uint64_t experiment_traj = 5;
inline constexpr std::uint64_t experiment_fit = 6;
inline constexpr std::uint64_t theta_grid = 7;
}  // namespace stream_purpose

}  // namespace odts
