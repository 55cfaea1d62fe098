#pragma once

#include <span>
#include <string>
#include <vector>

namespace odts {

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // unbiased (n-1 denominator)
  long long n = 0;
  double se_mean() const;
};

MeanVar mean_var(std::span<const double> v);

double median(std::vector<double> v);
// Type-7 (linear interpolation) quantile, q in [0,1].
double quantile(std::vector<double> v, double q);
double interquartile_range(std::vector<double> v);

// Standard error of the mean of a correlated series via batch means.
double batch_means_se(std::span<const double> v, int batches = 100);

// Two-sample Kolmogorov-Smirnov statistic and its alpha-level threshold
// (conservative for discrete data).
double two_sample_ks(std::vector<double> a, std::vector<double> b);
double ks_threshold(std::size_t n, std::size_t m, double alpha = 0.001);

// Shortest round-trip decimal representation.
std::string fmt_double(double v);
// 17 significant digits (trajectory x column contract).
std::string fmt_g17(double v);

}  // namespace odts
