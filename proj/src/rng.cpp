#include "odts/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace odts {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void check_rate(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::domain_error("poisson rate must be finite and nonnegative");
  }
  if (lambda > kMaxPoissonRate) {
    throw std::domain_error("poisson rate exceeds exactness guard 1e12");
  }
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t sa = seed;
  std::uint64_t sb = stream_id ^ 0x9E3779B97F4A7C15ULL;
  for (auto& w : state_) {
    w = splitmix64_next(sa) ^ splitmix64_next(sb);
  }
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) {
    state_[0] = 1;
  }
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256++
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

long long RngStream::poisson(double lambda) {
  check_rate(lambda);
  if (lambda == 0.0) return 0;
  if (lambda < 10.0) {
    // Inversion by sequential search on the cdf.
    const double u = next_double();
    double p = std::exp(-lambda);
    double cdf = p;
    long long k = 0;
    const long long cap =
        static_cast<long long>(lambda + 40.0 * std::sqrt(lambda) + 100.0);
    while (u > cdf && k < cap) {
      ++k;
      p *= lambda / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  // Hormann's PTRS transformed rejection, exact for lambda >= 10.
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = next_double() - 0.5;
    const double v = next_double();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<long long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const long long k = static_cast<long long>(kf);
    const double lhs = std::log(v) + std::log(invalpha) -
                       std::log(a / (us * us) + b);
    const double rhs =
        -lambda + kf * loglam - std::lgamma(kf + 1.0);
    if (lhs <= rhs) return k;
  }
}

std::tuple<long long, long long, int> RngStream::coupled_poisson(
    double lambda1, double lambda2) {
  check_rate(lambda1);
  check_rate(lambda2);
  if (lambda1 <= lambda2) {
    const long long y = poisson(lambda1);
    const long long v = poisson(lambda2 - lambda1);
    return {y, y + v, v == 0 ? 1 : 0};
  }
  const long long yp = poisson(lambda2);
  const long long v = poisson(lambda1 - lambda2);
  return {yp + v, yp, v == 0 ? 1 : 0};
}

double RngStream::gaussian(double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw std::domain_error("gaussian variance must be finite and positive");
  }
  const double u1 = next_double();
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  const double z = r * std::cos(2.0 * M_PI * u2);
  return std::sqrt(variance) * z;
}

std::uint64_t derive_stream_id(std::uint64_t purpose, std::uint64_t a,
                               std::uint64_t b) {
  return (purpose << 56) | ((a & 0xFFFFFFULL) << 32) | (b & 0xFFFFFFFFULL);
}

}  // namespace odts
