#pragma once

#include <span>
#include <vector>

#include "odts/models.hpp"
#include "odts/space.hpp"

namespace odts {

// Average conditional log-likelihood (nats per observation).
struct LikelihoodValue {
  double value = 0.0;
  long long n = 0;
  double x0 = 0.0;
};

// n^{-1} sum_k ln h(f<y_{1:k-1}>(x0); y_k), states computed by one forward
// recursion. The k = 1 term conditions on x0 itself.
LikelihoodValue conditional_loglik(const ModelSpec& model, double x0,
                                   std::span<const double> y);

// Same average, with every conditioning state replaced by the m-term
// truncation of the infinite-past map, fed from the pre-sample history.
// y_extended is ordered oldest to newest; its first history_len entries are
// the history (must be >= m+1) and the remaining n entries are scored.
LikelihoodValue stationary_loglik(const ModelSpec& model,
                                  std::span<const double> y_extended,
                                  long long history_len, int m);

// max over the grid of |conditional - stationary| at fixed data; the grid
// stands in for the sup over Theta.
double loglik_gap(const ParameterSpace& space, double x0,
                  std::span<const double> y_extended, long long history_len,
                  int m, std::span<const std::vector<double>> theta_grid);

namespace detail {

// Per-dataset reusable terms for the optimizer's hot path.
struct PreparedSeries {
  std::vector<double> y;
  std::vector<double> log1p_y;     // log-linear
  std::vector<std::uint8_t> outside;  // threshold indicator
  std::vector<double> lgamma_y1;   // ln(y!)
  bool all_zero = false;
  bool constant = false;
};

PreparedSeries prepare_series(const ModelSpec& model,
                              std::span<const double> y);
double loglik_threshold_prepared(const ThresholdParams& p, double x0,
                                 const PreparedSeries& s);
double loglik_loglinear_prepared(const LogLinearParams& p, double x0,
                                 const PreparedSeries& s);

}  // namespace detail

}  // namespace odts
