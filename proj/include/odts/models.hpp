#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace odts {

// Divergent simulation (state or rate left the tractable domain).
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& what, long long step_)
      : std::runtime_error(what), step(step_) {}
  long long step;
};

// Invalid configuration (empty parameter space, bad experiment setup, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Family { threshold, loglinear, garch };

const char* family_name(Family f);
Family family_from_name(std::string_view name);

// Poisson threshold autoregression:
//   X' = omega + a X + b y + (c X + d y) 1{y not in (L, U)},  Y | X ~ P(X).
// U may be +infinity, in which case the indicator reads 1{y <= L}.
struct ThresholdParams {
  double omega = 1.0;
  double a = 0.2;
  double b = 0.2;
  double c = 0.0;
  double d = 0.0;
  double L = 1.0;
  double U = 3.0;

  bool outside(double y) const { return !(y > L && y < U); }
  double slope(double y) const { return a + (outside(y) ? c : 0.0); }
  double obs_term(double y) const { return (b + (outside(y) ? d : 0.0)) * y; }
  // Pathwise contraction factor of the shared-innovation kernel.
  double rho() const { return std::max(a, a + c); }

  void validate() const;          // min(omega,a,b,a+c,b+d) > 0, 0 < L < U
  void validate_relaxed() const;  // simulation guard: nonnegative combinations
};

// Log-linear Poisson autoregression:
//   X' = d + a X + b ln(1 + y),  Y | X ~ P(e^X).
struct LogLinearParams {
  double d = 0.0;
  double a = 0.0;
  double b = 0.0;

  double gamma() const {
    return std::max({std::fabs(a), std::fabs(b), std::fabs(a + b)});
  }
  void validate() const;  // all finite
};

// GARCH(1,1): X' = d + a X + b y^2 with X the conditional variance,
// Y | X ~ N(0, X).
struct GarchParams {
  double d = 0.1;
  double a = 0.1;
  double b = 0.1;

  void validate() const;  // min(d,a,b) > 0
};

struct ModelSpec {
  std::variant<ThresholdParams, LogLinearParams, GarchParams> params;

  Family family() const;
  const ThresholdParams& threshold() const {
    return std::get<ThresholdParams>(params);
  }
  const LogLinearParams& loglinear() const {
    return std::get<LogLinearParams>(params);
  }
  const GarchParams& garch() const { return std::get<GarchParams>(params); }

  void validate() const;
};

inline ModelSpec make_threshold(const ThresholdParams& p) { return {p}; }
inline ModelSpec make_loglinear(const LogLinearParams& p) { return {p}; }
inline ModelSpec make_garch(const GarchParams& p) { return {p}; }

// One-step state map f_y(x). Validates the observation for the family
// (counts must be nonnegative integers); throws std::domain_error otherwise.
double link(const ModelSpec& model, double x, double y);

// ln h(x; y). Threshold: -x + y ln x - ln y!; log-linear: -e^x + x y - ln y!;
// GARCH: N(0, x) log-density. ln y! goes through lgamma.
double log_observation_density(const ModelSpec& model, double x, double y);

// f<y_seq>(x0), the composition f_{y_t} o ... o f_{y_s}; empty sequence is
// the identity.
double iterate_link(const ModelSpec& model, double x0,
                    std::span<const double> y_seq);

// m-term truncation of the infinite-past state map. y_past is ordered most
// recent first and must hold at least m+1 entries. Threshold sums
// [omega + b(y_j)] times the product of the j most recent slopes; log-linear
// keeps the exact d/(1-a) geometric part and truncates the observation
// series only.
double stationary_state(const ModelSpec& model,
                        std::span<const double> y_past_recent_first, int m);

// Smallest depth m with alpha_bar^m <= tol.
int default_truncation_depth(double alpha_bar, double tol = 1e-10);

// Tail cutoff for exact Poisson expectations: beyond mean + 12 sigma the
// remaining mass is below 1e-12 on the grids used here.
long long poisson_tail_cutoff(double rate);

double poisson_log_pmf(double lambda, long long y);

// P[N not in (L,U)] and E[N 1{N not in (L,U)}] for N ~ Poisson(lambda),
// computed by finite sums over whichever of the two regions is bounded
// (exact; no truncation error).
struct ThresholdTailSums {
  double p_outside;
  double e_outside;
};
ThresholdTailSums poisson_outside_sums(double lambda, double L, double U);

bool has_integer_strictly_inside(double L, double U);

}  // namespace odts
