#include "odts/likelihood.hpp"

#include <cmath>
#include <limits>

namespace odts {

namespace detail {

PreparedSeries prepare_series(const ModelSpec& model,
                              std::span<const double> y) {
  if (y.empty()) throw std::invalid_argument("observation sequence is empty");
  PreparedSeries s;
  s.y.assign(y.begin(), y.end());
  s.lgamma_y1.resize(y.size());
  const Family fam = model.family();
  if (fam == Family::threshold) s.outside.resize(y.size());
  if (fam == Family::loglinear) s.log1p_y.resize(y.size());
  bool all_zero = true, constant = true;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double v = y[k];
    if (!std::isfinite(v) || v < 0.0 || std::floor(v) != v) {
      throw std::domain_error("count observations must be nonnegative integers");
    }
    s.lgamma_y1[k] = std::lgamma(v + 1.0);
    if (fam == Family::threshold) s.outside[k] = model.threshold().outside(v);
    if (fam == Family::loglinear) s.log1p_y[k] = std::log1p(v);
    if (v != 0.0) all_zero = false;
    if (v != y[0]) constant = false;
  }
  s.all_zero = all_zero;
  s.constant = constant;
  return s;
}

double loglik_threshold_prepared(const ThresholdParams& p, double x0,
                                 const PreparedSeries& s) {
  double state = x0;
  double acc = 0.0;
  for (std::size_t k = 0; k < s.y.size(); ++k) {
    if (!(state > 0.0)) {
      throw std::domain_error("threshold state left (0, inf) in likelihood");
    }
    const double y = s.y[k];
    acc += y * std::log(state) - state - s.lgamma_y1[k];
    const bool out = s.outside[k];
    state = p.omega + (p.a + (out ? p.c : 0.0)) * state +
            (p.b + (out ? p.d : 0.0)) * y;
  }
  return acc / static_cast<double>(s.y.size());
}

double loglik_loglinear_prepared(const LogLinearParams& p, double x0,
                                 const PreparedSeries& s) {
  double state = x0;
  double acc = 0.0;
  for (std::size_t k = 0; k < s.y.size(); ++k) {
    if (state > 700.0) return -std::numeric_limits<double>::infinity();
    acc += state * s.y[k] - std::exp(state) - s.lgamma_y1[k];
    state = p.d + p.a * state + p.b * s.log1p_y[k];
  }
  return acc / static_cast<double>(s.y.size());
}

}  // namespace detail

LikelihoodValue conditional_loglik(const ModelSpec& model, double x0,
                                   std::span<const double> y) {
  if (y.empty()) throw std::invalid_argument("observation sequence is empty");
  if (!std::isfinite(x0)) throw std::domain_error("x0 must be finite");
  LikelihoodValue out;
  out.n = static_cast<long long>(y.size());
  out.x0 = x0;
  switch (model.family()) {
    case Family::threshold: {
      const auto s = detail::prepare_series(model, y);
      out.value = detail::loglik_threshold_prepared(model.threshold(), x0, s);
      return out;
    }
    case Family::loglinear: {
      const auto s = detail::prepare_series(model, y);
      out.value = detail::loglik_loglinear_prepared(model.loglinear(), x0, s);
      return out;
    }
    case Family::garch: {
      double state = x0;
      double acc = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) {
        acc += log_observation_density(model, state, y[k]);
        state = link(model, state, y[k]);
      }
      out.value = acc / static_cast<double>(y.size());
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

LikelihoodValue stationary_loglik(const ModelSpec& model,
                                  std::span<const double> y_extended,
                                  long long history_len, int m) {
  if (model.family() == Family::garch) {
    throw std::domain_error("stationary likelihood is defined for count families");
  }
  if (m < 0) throw std::invalid_argument("truncation depth must be >= 0");
  if (history_len < m + 1) {
    throw std::invalid_argument(
        "stationary_loglik needs pre-sample history of length >= m+1");
  }
  const long long total = static_cast<long long>(y_extended.size());
  const long long n = total - history_len;
  if (n < 1) throw std::invalid_argument("no observations beyond the history");
  for (double v : y_extended) {
    if (!std::isfinite(v) || v < 0.0 || std::floor(v) != v) {
      throw std::domain_error("count observations must be nonnegative integers");
    }
  }

  LikelihoodValue out;
  out.n = n;
  out.x0 = std::numeric_limits<double>::quiet_NaN();

  double acc = 0.0;
  if (model.family() == Family::threshold) {
    const auto& p = model.threshold();
    for (long long k = 1; k <= n; ++k) {
      // Most recent first, ending at the observation before y_k.
      double s = 0.0, coef = 1.0;
      const long long newest = history_len + k - 2;
      for (int j = 0; j <= m; ++j) {
        const double yj = y_extended[newest - j];
        s += (p.omega + p.obs_term(yj)) * coef;
        coef *= p.slope(yj);
      }
      const double yk = y_extended[history_len + k - 1];
      acc += yk * std::log(s) - s - std::lgamma(yk + 1.0);
    }
  } else {
    const auto& p = model.loglinear();
    if (!(std::fabs(p.a) < 1.0)) {
      throw std::domain_error("loglinear stationary map needs |a| < 1");
    }
    const double base = p.d / (1.0 - p.a);
    for (long long k = 1; k <= n; ++k) {
      const long long newest = history_len + k - 2;
      double horner = 0.0;
      for (int j = m; j >= 0; --j) {
        horner = std::log1p(y_extended[newest - j]) + p.a * horner;
      }
      const double s = base + p.b * horner;
      const double yk = y_extended[history_len + k - 1];
      acc += yk * s - std::exp(s) - std::lgamma(yk + 1.0);
    }
  }
  out.value = acc / static_cast<double>(n);
  return out;
}

double loglik_gap(const ParameterSpace& space, double x0,
                  std::span<const double> y_extended, long long history_len,
                  int m, std::span<const std::vector<double>> theta_grid) {
  if (theta_grid.empty()) throw std::invalid_argument("theta grid is empty");
  const long long n = static_cast<long long>(y_extended.size()) - history_len;
  if (n < 1) throw std::invalid_argument("no observations beyond the history");
  const std::span<const double> sample =
      y_extended.subspan(static_cast<std::size_t>(history_len));
  double worst = 0.0;
  for (const auto& theta : theta_grid) {
    const ModelSpec model = space.model_from_theta(theta);
    const double cond = conditional_loglik(model, x0, sample).value;
    const double stat = stationary_loglik(model, y_extended, history_len, m).value;
    worst = std::max(worst, std::fabs(cond - stat));
  }
  return worst;
}

}  // namespace odts
