#include "odts/models.hpp"

#include <limits>

#include "odts/rng.hpp"

namespace odts {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::domain_error(std::string(what) + " must be finite");
  }
}

void require_count(double y, const char* family) {
  if (!std::isfinite(y) || y < 0.0 || std::floor(y) != y) {
    throw std::domain_error(std::string(family) +
                            " observations must be nonnegative integers");
  }
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::threshold: return "threshold";
    case Family::loglinear: return "loglinear";
    case Family::garch: return "garch";
  }
  return "?";
}

Family family_from_name(std::string_view name) {
  if (name == "threshold") return Family::threshold;
  if (name == "loglinear") return Family::loglinear;
  if (name == "garch") return Family::garch;
  throw ConfigError("unknown model family: " + std::string(name));
}

void ThresholdParams::validate() const {
  for (double v : {omega, a, b, c, d, L}) require_finite(v, "threshold parameter");
  if (std::isnan(U)) throw std::domain_error("threshold U must not be NaN");
  const double m = std::min({omega, a, b, a + c, b + d});
  if (!(m > 0.0)) {
    throw std::domain_error(
        "threshold parameters need min(omega, a, b, a+c, b+d) > 0");
  }
  if (!(0.0 < L && L < U)) {
    throw std::domain_error("threshold interval needs 0 < L < U");
  }
}

void ThresholdParams::validate_relaxed() const {
  for (double v : {omega, a, b, c, d, L}) require_finite(v, "threshold parameter");
  if (std::isnan(U)) throw std::domain_error("threshold U must not be NaN");
  if (!(omega > 0.0) || a < 0.0 || b < 0.0 || a + c < 0.0 || b + d < 0.0) {
    throw std::domain_error(
        "threshold simulation needs omega > 0 and a, b, a+c, b+d >= 0");
  }
  if (!(L < U)) throw std::domain_error("threshold interval needs L < U");
}

void LogLinearParams::validate() const {
  require_finite(d, "loglinear d");
  require_finite(a, "loglinear a");
  require_finite(b, "loglinear b");
}

void GarchParams::validate() const {
  require_finite(d, "garch d");
  require_finite(a, "garch a");
  require_finite(b, "garch b");
  if (!(std::min({d, a, b}) > 0.0)) {
    throw std::domain_error("garch parameters need min(d, a, b) > 0");
  }
}

Family ModelSpec::family() const {
  return static_cast<Family>(params.index());
}

void ModelSpec::validate() const {
  std::visit([](const auto& p) { p.validate(); }, params);
}

double link(const ModelSpec& model, double x, double y) {
  require_finite(x, "state");
  switch (model.family()) {
    case Family::threshold: {
      const auto& p = model.threshold();
      require_count(y, "threshold");
      if (x < 0.0) throw std::domain_error("threshold state must be >= 0");
      return p.omega + p.slope(y) * x + p.obs_term(y);
    }
    case Family::loglinear: {
      const auto& p = model.loglinear();
      require_count(y, "loglinear");
      return p.d + p.a * x + p.b * std::log1p(y);
    }
    case Family::garch: {
      const auto& p = model.garch();
      require_finite(y, "garch observation");
      if (!(x > 0.0)) throw std::domain_error("garch variance must be > 0");
      return p.d + p.a * x + p.b * y * y;
    }
  }
  throw std::logic_error("unreachable");
}

double log_observation_density(const ModelSpec& model, double x, double y) {
  require_finite(x, "state");
  switch (model.family()) {
    case Family::threshold: {
      require_count(y, "threshold");
      if (!(x > 0.0)) {
        throw std::domain_error("threshold density needs state x > 0");
      }
      return -x + y * std::log(x) - std::lgamma(y + 1.0);
    }
    case Family::loglinear: {
      require_count(y, "loglinear");
      return -std::exp(x) + x * y - std::lgamma(y + 1.0);
    }
    case Family::garch: {
      require_finite(y, "garch observation");
      if (!(x > 0.0)) {
        throw std::domain_error("garch density needs variance x > 0");
      }
      return -0.5 * (std::log(2.0 * M_PI * x) + y * y / x);
    }
  }
  throw std::logic_error("unreachable");
}

double iterate_link(const ModelSpec& model, double x0,
                    std::span<const double> y_seq) {
  double x = x0;
  for (double y : y_seq) x = link(model, x, y);
  return x;
}

double stationary_state(const ModelSpec& model,
                        std::span<const double> y_past_recent_first, int m) {
  if (m < 0) throw std::invalid_argument("truncation depth must be >= 0");
  if (y_past_recent_first.size() < static_cast<size_t>(m) + 1) {
    throw std::invalid_argument(
        "stationary_state needs at least m+1 past observations");
  }
  switch (model.family()) {
    case Family::threshold: {
      const auto& p = model.threshold();
      double s = 0.0;
      double coef = 1.0;
      for (int j = 0; j <= m; ++j) {
        const double y = y_past_recent_first[j];
        require_count(y, "threshold");
        s += (p.omega + p.obs_term(y)) * coef;
        coef *= p.slope(y);
      }
      return s;
    }
    case Family::loglinear: {
      const auto& p = model.loglinear();
      if (!(std::fabs(p.a) < 1.0)) {
        throw std::domain_error("loglinear stationary map needs |a| < 1");
      }
      double acc = 0.0;  // Horner over sum_j a^j ln(1 + y_j)
      for (int j = m; j >= 0; --j) {
        const double y = y_past_recent_first[j];
        require_count(y, "loglinear");
        acc = std::log1p(y) + p.a * acc;
      }
      return p.d / (1.0 - p.a) + p.b * acc;
    }
    case Family::garch:
      throw std::domain_error(
          "stationary_state supports threshold and loglinear only");
  }
  throw std::logic_error("unreachable");
}

int default_truncation_depth(double alpha_bar, double tol) {
  if (!(alpha_bar > 0.0 && alpha_bar < 1.0)) {
    throw std::domain_error("truncation depth needs alpha_bar in (0,1)");
  }
  return static_cast<int>(std::ceil(std::log(tol) / std::log(alpha_bar)));
}

long long poisson_tail_cutoff(double rate) {
  if (!(rate >= 0.0) || rate > kMaxPoissonRate) {
    throw std::domain_error("rate outside exact-summation guard");
  }
  return static_cast<long long>(
      std::ceil(rate + 12.0 * std::sqrt(rate) + 30.0));
}

double poisson_log_pmf(double lambda, long long y) {
  if (y < 0) return -kInf;
  if (lambda == 0.0) return y == 0 ? 0.0 : -kInf;
  const double yd = static_cast<double>(y);
  return yd * std::log(lambda) - lambda - std::lgamma(yd + 1.0);
}

ThresholdTailSums poisson_outside_sums(double lambda, double L, double U) {
  if (!(lambda >= 0.0) || lambda > kMaxPoissonRate) {
    throw std::domain_error("rate outside exact-summation guard");
  }
  if (std::isinf(U)) {
    // Outside region is {k <= L}: finite.
    double p = 0.0, e = 0.0;
    const long long hi = static_cast<long long>(std::floor(L));
    for (long long k = 0; k <= hi; ++k) {
      const double w = std::exp(poisson_log_pmf(lambda, k));
      p += w;
      e += static_cast<double>(k) * w;
    }
    return {p, e};
  }
  // Inside region {L < k < U} is finite; complement against exact moments.
  const long long klo = static_cast<long long>(std::floor(L)) + 1;
  const long long khi = static_cast<long long>(std::ceil(U)) - 1;
  double p_in = 0.0, e_in = 0.0;
  for (long long k = std::max<long long>(klo, 0); k <= khi; ++k) {
    const double w = std::exp(poisson_log_pmf(lambda, k));
    p_in += w;
    e_in += static_cast<double>(k) * w;
  }
  return {std::max(0.0, 1.0 - p_in), std::max(0.0, lambda - e_in)};
}

bool has_integer_strictly_inside(double L, double U) {
  const double lo = std::floor(L) + 1.0;           // smallest integer > L
  const double hi = std::isinf(U) ? kInf : std::ceil(U) - 1.0;
  return lo <= hi && hi >= 0.0;
}

}  // namespace odts
