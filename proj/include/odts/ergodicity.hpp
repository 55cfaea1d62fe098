#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "odts/models.hpp"
#include "odts/rng.hpp"
#include "odts/simulate.hpp"

namespace odts {

// Certificate for QV <= lambda V + beta at grid resolution. lambda_hat is
// the sup of QV/V over the tail region (+1e-6 safety margin); beta_hat the
// sup of (QV - lambda_hat V)_+ over the full grid.
struct DriftReport {
  std::vector<double> grid;
  std::vector<double> qv;
  std::vector<double> ratio;
  double tail_start = 0.0;
  double lambda_hat = 0.0;
  double beta_hat = 0.0;
  double worst_tail_x = 0.0;
  bool verdict = false;  // lambda_hat < 1
};

// Exact QV(x) with V(x) = x: (a+b)x + c x P[N(x) outside] + d E[N(x) 1out] + omega.
// The indicator sums are finite, so there is no truncation error.
double drift_threshold_exact(const ThresholdParams& p, double x);

// (lhs, rhs) of QV(x) <= e^{|d|} (1 + 4 e^{gamma |x|}) with V = e^{|x|};
// lhs by truncated summation over Poisson(e^x).
std::pair<double, double> drift_loglinear_bound_check(const LogLinearParams& p,
                                                      double x);

std::vector<double> default_threshold_drift_grid();  // 2^-3 .. 2^12
std::vector<double> default_loglinear_drift_grid();  // [-8, 8] step 0.25

DriftReport drift_report_threshold(const ThresholdParams& p,
                                   std::span<const double> grid = {},
                                   double tail_start = 32.0);
DriftReport drift_report_loglinear(const LogLinearParams& p,
                                   std::span<const double> grid = {},
                                   double tail_start = 4.0);

using StatePair = std::pair<double, double>;

std::vector<StatePair> default_alpha_grid(Family family);
std::vector<StatePair> default_qsharp_w_grid();  // [-4,4]^2 step 0.25

// 1 - alpha(x,x') <= d(x,x') W(x,x'), evaluated in closed form. W = 1 for
// the threshold family, e^{|x v x'|} for log-linear.
struct AlphaBoundReport {
  double max_deficit = 0.0;
  StatePair worst_pair{0.0, 0.0};
  long long pairs = 0;
  bool verdict = false;  // max_deficit <= 0
};
AlphaBoundReport check_alpha_bound(const ModelSpec& model,
                                   std::span<const StatePair> grid);

// Exact one-step expected contraction factor under the shared innovation:
// E|a + c 1{Y outside}| with Y ~ P(x ^ x').
double threshold_expected_contraction(const ThresholdParams& p, double x,
                                      double x_prime);

struct QSharpContractionReport {
  double rho = 0.0;                  // a v (a+c), or |a|
  double max_identity_error = 0.0;   // distance of factors to {a, a+c} / |a|
  double max_pathwise_factor = 0.0;
  double max_expected_factor = 0.0;  // exact sums over the grid
  long long replicates = 0;
  bool pathwise_ok = false;
  bool expected_ok = false;
  bool verdict = false;  // pathwise_ok and (rho < 1 or expected route)
};
QSharpContractionReport check_qsharp_contraction(
    const ModelSpec& model, std::span<const StatePair> grid,
    long long replicates, RngStream& rng);

// Q#W(x,x') = E e^{|X1 v X1'|} by truncated summation over the shared
// Poisson(e^{x^x'}) innovation; checked pointwise against
// 2 e^{|d|}(1 + 4 e^{gamma(|x| v |x'|)}), with beta_hat = max(Q#W - W)
// instantiating the W-drift inequality. Truncation is certified by
// depth doubling.
struct QSharpWDriftReport {
  double max_bound_violation = 0.0;  // max(lhs - rhs); <= 0 passes
  StatePair worst_pair{0.0, 0.0};
  double beta_hat = 0.0;
  double truncation_gap = 0.0;
  long long pairs = 0;
  bool verdict = false;
};
QSharpWDriftReport check_qsharp_w_drift(const LogLinearParams& p,
                                        std::span<const StatePair> grid);
double qsharp_w_exact(const LogLinearParams& p, double x, double x_prime,
                      long long y_max = 0);  // y_max <= 0: default cutoff

// Two-estimator Monte Carlo check of the coupled-chain identity:
// E[phi(Xn,Xn') 1{T > n}] against the alpha-weighted shared-innovation
// estimator.
struct CouplingIdentityResult {
  double lhs = 0.0, lhs_se = 0.0;
  double rhs = 0.0, rhs_se = 0.0;
  long long replicates = 0;
  double combined_se() const;
  bool agree(double k = 5.0) const;
};
CouplingIdentityResult check_coupling_identity(
    const ModelSpec& model, double x, double x_prime, int n,
    const std::function<double(double, double)>& phi, long long replicates,
    RngStream& rng);

// pi V <= beta/(1-lambda): long-run time average of V against the drift
// certificate, with a batch-means standard error.
struct StationaryMomentResult {
  double empirical = 0.0;
  double se = 0.0;
  double bound = 0.0;
  long long horizon = 0;
  bool verdict = false;  // empirical <= bound + 3 se
};
StationaryMomentResult check_stationary_moment(const ModelSpec& model,
                                               double lambda, double beta,
                                               long long horizon,
                                               RngStream& rng,
                                               long long burn_in = 10000);

struct ConditionResult {
  std::string name;
  bool pass = false;
  std::vector<std::pair<std::string, std::string>> details;
};

struct VerifyReport {
  Family family;
  std::vector<std::string> coord_names;
  std::vector<double> theta;
  std::vector<ConditionResult> conditions;
  bool all_pass() const;
  std::string render() const;
};

struct VerifyOptions {
  long long qsharp_replicates = 10000;
  long long identity_replicates = 100000;
  long long moment_horizon = 1000000;
  long long burn_in = 10000;
  std::uint64_t seed = 1;
};

VerifyReport run_verification(const ModelSpec& model, const VerifyOptions& opt);

}  // namespace odts
