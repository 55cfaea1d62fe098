#include "odts/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace odts {

double MeanVar::se_mean() const {
  return n > 1 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
}

MeanVar mean_var(std::span<const double> v) {
  MeanVar r;
  r.n = static_cast<long long>(v.size());
  if (r.n == 0) return r;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(r.n);
  double s2 = 0.0;
  for (double x : v) s2 += (x - m) * (x - m);
  r.mean = m;
  r.var = r.n > 1 ? s2 / static_cast<double>(r.n - 1) : 0.0;
  return r;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("q outside [0,1]");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double interquartile_range(std::vector<double> v) {
  const double q1 = quantile(v, 0.25);
  const double q3 = quantile(std::move(v), 0.75);
  return q3 - q1;
}

double batch_means_se(std::span<const double> v, int batches) {
  if (batches < 2 || v.size() < static_cast<std::size_t>(2 * batches)) {
    throw std::invalid_argument("batch_means_se needs >= 2 samples per batch");
  }
  const std::size_t width = v.size() / batches;
  std::vector<double> means(batches);
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < width; ++i) s += v[b * width + i];
    means[b] = s / static_cast<double>(width);
  }
  const MeanVar mv = mean_var(means);
  return std::sqrt(mv.var / static_cast<double>(batches));
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty KS sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na -
                              static_cast<double>(j) / nb));
  }
  return d;
}

double ks_threshold(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  return c * std::sqrt((nd + md) / (nd * md));
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace odts
