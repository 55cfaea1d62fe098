#include "odts/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "odts/stats.hpp"

namespace odts {

namespace {

constexpr double kLambdaSafety = 1e-6;

double exact_sum_over_poisson(double rate, long long y_max,
                              const std::function<double(long long)>& term) {
  double acc = 0.0;
  for (long long y = 0; y <= y_max; ++y) {
    const double w = std::exp(poisson_log_pmf(rate, y));
    if (w > 0.0) acc += w * term(y);
  }
  return acc;
}

DriftReport assemble_drift(std::vector<double> grid, std::vector<double> qv,
                           std::vector<double> v_of_x, double tail_start) {
  DriftReport r;
  r.grid = std::move(grid);
  r.qv = std::move(qv);
  r.ratio.resize(r.grid.size());
  r.tail_start = tail_start;
  double tail_max = 0.0;
  double worst_x = r.grid.empty() ? 0.0 : r.grid.back();
  bool tail_seen = false;
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    r.ratio[i] = r.qv[i] / v_of_x[i];
    if (std::fabs(r.grid[i]) >= tail_start) {
      tail_seen = true;
      if (r.ratio[i] > tail_max) {
        tail_max = r.ratio[i];
        worst_x = r.grid[i];
      }
    }
  }
  if (!tail_seen) throw std::invalid_argument("drift grid has no tail points");
  r.lambda_hat = tail_max + kLambdaSafety;
  r.worst_tail_x = worst_x;
  double beta = 0.0;
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    beta = std::max(beta, r.qv[i] - r.lambda_hat * v_of_x[i]);
  }
  r.beta_hat = beta;
  r.verdict = std::isfinite(r.lambda_hat) && r.lambda_hat < 1.0 &&
              std::isfinite(r.beta_hat);
  return r;
}

}  // namespace

double drift_threshold_exact(const ThresholdParams& p, double x) {
  if (!(x >= 0.0)) throw std::domain_error("drift evaluation needs x >= 0");
  const auto sums = poisson_outside_sums(x, p.L, p.U);
  return (p.a + p.b) * x + p.c * x * sums.p_outside + p.d * sums.e_outside +
         p.omega;
}

std::pair<double, double> drift_loglinear_bound_check(const LogLinearParams& p,
                                                      double x) {
  if (!(std::fabs(x) <= std::log(kMaxPoissonRate))) {
    throw std::domain_error("drift evaluation outside the overflow guard");
  }
  const double rate = std::exp(x);
  const long long y_max = poisson_tail_cutoff(rate);
  const double lhs = exact_sum_over_poisson(rate, y_max, [&](long long y) {
    return std::exp(std::fabs(p.d + p.a * x + p.b * std::log1p(y)));
  });
  const double rhs =
      std::exp(std::fabs(p.d)) * (1.0 + 4.0 * std::exp(p.gamma() * std::fabs(x)));
  return {lhs, rhs};
}

std::vector<double> default_threshold_drift_grid() {
  std::vector<double> g;
  for (int j = -3; j <= 12; ++j) g.push_back(std::ldexp(1.0, j));
  return g;
}

std::vector<double> default_loglinear_drift_grid() {
  std::vector<double> g;
  for (int i = -32; i <= 32; ++i) g.push_back(0.25 * i);
  return g;
}

DriftReport drift_report_threshold(const ThresholdParams& p,
                                   std::span<const double> grid,
                                   double tail_start) {
  std::vector<double> g(grid.begin(), grid.end());
  if (g.empty()) g = default_threshold_drift_grid();
  std::vector<double> qv(g.size()), v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    qv[i] = drift_threshold_exact(p, g[i]);
    v[i] = g[i];
  }
  return assemble_drift(std::move(g), std::move(qv), std::move(v), tail_start);
}

DriftReport drift_report_loglinear(const LogLinearParams& p,
                                   std::span<const double> grid,
                                   double tail_start) {
  std::vector<double> g(grid.begin(), grid.end());
  if (g.empty()) g = default_loglinear_drift_grid();
  std::vector<double> qv(g.size()), v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    qv[i] = drift_loglinear_bound_check(p, g[i]).first;
    v[i] = std::exp(std::fabs(g[i]));
  }
  return assemble_drift(std::move(g), std::move(qv), std::move(v), tail_start);
}

std::vector<StatePair> default_alpha_grid(Family family) {
  std::vector<StatePair> pairs;
  if (family == Family::threshold) {
    for (int i = 1; i <= 32; ++i) {
      for (int j = 1; j <= 32; ++j) {
        pairs.emplace_back(0.25 * i, 0.25 * j);
      }
    }
  } else {
    for (int i = -30; i <= 30; ++i) {
      for (int j = -30; j <= 30; ++j) {
        pairs.emplace_back(0.1 * i, 0.1 * j);
      }
    }
  }
  return pairs;
}

std::vector<StatePair> default_qsharp_w_grid() {
  std::vector<StatePair> pairs;
  for (int i = -16; i <= 16; ++i) {
    for (int j = -16; j <= 16; ++j) {
      pairs.emplace_back(0.25 * i, 0.25 * j);
    }
  }
  return pairs;
}

AlphaBoundReport check_alpha_bound(const ModelSpec& model,
                                   std::span<const StatePair> grid) {
  if (grid.empty()) throw std::invalid_argument("alpha-bound grid is empty");
  AlphaBoundReport r;
  r.pairs = static_cast<long long>(grid.size());
  r.max_deficit = -std::numeric_limits<double>::infinity();
  const Family fam = model.family();
  for (const auto& [x, xp] : grid) {
    double one_minus_alpha, bound;
    if (fam == Family::threshold) {
      one_minus_alpha = -std::expm1(-std::fabs(x - xp));
      bound = std::fabs(x - xp);  // W = 1
    } else if (fam == Family::loglinear) {
      const double gap = std::fabs(std::exp(x) - std::exp(xp));
      one_minus_alpha = -std::expm1(-gap);
      bound = std::fabs(x - xp) * std::exp(std::fabs(std::max(x, xp)));
    } else {
      throw std::domain_error("alpha bound is Poisson-thinning specific");
    }
    const double deficit = one_minus_alpha - bound;
    if (deficit > r.max_deficit) {
      r.max_deficit = deficit;
      r.worst_pair = {x, xp};
    }
  }
  r.verdict = r.max_deficit <= 0.0;
  return r;
}

double threshold_expected_contraction(const ThresholdParams& p, double x,
                                      double x_prime) {
  const auto sums = poisson_outside_sums(std::min(x, x_prime), p.L, p.U);
  const double p_out = sums.p_outside;
  return std::fabs(p.a) * (1.0 - p_out) + std::fabs(p.a + p.c) * p_out;
}

QSharpContractionReport check_qsharp_contraction(
    const ModelSpec& model, std::span<const StatePair> grid,
    long long replicates, RngStream& rng) {
  if (grid.empty()) throw std::invalid_argument("contraction grid is empty");
  if (replicates < 1) throw std::invalid_argument("need >= 1 replicate");
  QSharpContractionReport r;
  r.replicates = replicates;
  const Family fam = model.family();
  if (fam == Family::threshold) {
    const auto& p = model.threshold();
    r.rho = p.rho();
  } else if (fam == Family::loglinear) {
    r.rho = std::fabs(model.loglinear().a);
  } else {
    throw std::domain_error("contraction check is Poisson-thinning specific");
  }

  for (long long rep = 0; rep < replicates; ++rep) {
    const auto& [x, xp] = grid[rep % grid.size()];
    const double gap0 = std::fabs(x - xp);
    if (gap0 == 0.0) continue;
    const auto path = simulate_qsharp(model, x, xp, 1, rng);
    const double gap1 = std::fabs(path.x[1] - path.x_prime[1]);
    const double factor = gap1 / gap0;
    r.max_pathwise_factor = std::max(r.max_pathwise_factor, factor);
    double err;
    if (fam == Family::threshold) {
      const auto& p = model.threshold();
      err = std::min(std::fabs(gap1 - std::fabs(p.a) * gap0),
                     std::fabs(gap1 - std::fabs(p.a + p.c) * gap0));
    } else {
      err = std::fabs(gap1 - r.rho * gap0);
    }
    r.max_identity_error = std::max(r.max_identity_error, err);
  }

  if (fam == Family::threshold) {
    const auto& p = model.threshold();
    for (const auto& [x, xp] : grid) {
      r.max_expected_factor = std::max(r.max_expected_factor,
                                       threshold_expected_contraction(p, x, xp));
    }
  } else {
    r.max_expected_factor = r.rho;
  }

  r.pathwise_ok = r.max_identity_error <= 1e-12 &&
                  r.max_pathwise_factor <= std::max(r.rho, r.max_expected_factor) +
                                               1e-12;
  r.expected_ok = r.max_expected_factor < 1.0;
  r.verdict = r.pathwise_ok && (r.rho < 1.0 || r.expected_ok);
  return r;
}

double qsharp_w_exact(const LogLinearParams& p, double x, double x_prime,
                      long long y_max) {
  const double lo = std::min(x, x_prime);
  if (lo > std::log(kMaxPoissonRate)) {
    throw std::domain_error("Q#W evaluation outside the overflow guard");
  }
  const double rate = std::exp(lo);
  if (y_max <= 0) y_max = poisson_tail_cutoff(rate);
  return exact_sum_over_poisson(rate, y_max, [&](long long y) {
    const double l = std::log1p(y);
    const double x1 = p.d + p.a * x + p.b * l;
    const double x1p = p.d + p.a * x_prime + p.b * l;
    return std::exp(std::fabs(std::max(x1, x1p)));
  });
}

QSharpWDriftReport check_qsharp_w_drift(const LogLinearParams& p,
                                        std::span<const StatePair> grid) {
  if (grid.empty()) throw std::invalid_argument("Q#W grid is empty");
  QSharpWDriftReport r;
  r.pairs = static_cast<long long>(grid.size());
  r.max_bound_violation = -std::numeric_limits<double>::infinity();
  const double gamma = p.gamma();
  const double ed = std::exp(std::fabs(p.d));
  for (const auto& [x, xp] : grid) {
    const long long base = poisson_tail_cutoff(std::exp(std::min(x, xp)));
    const double lhs = qsharp_w_exact(p, x, xp, base);
    const double lhs2 = qsharp_w_exact(p, x, xp, 2 * base);
    r.truncation_gap = std::max(
        r.truncation_gap, std::fabs(lhs - lhs2) / std::max(1.0, std::fabs(lhs2)));
    const double rhs =
        2.0 * ed * (1.0 + 4.0 * std::exp(gamma * std::max(std::fabs(x),
                                                          std::fabs(xp))));
    const double violation = lhs - rhs;
    if (violation > r.max_bound_violation) {
      r.max_bound_violation = violation;
      r.worst_pair = {x, xp};
    }
    const double w = std::exp(std::fabs(std::max(x, xp)));
    r.beta_hat = std::max(r.beta_hat, lhs - w);
  }
  r.verdict = r.max_bound_violation <= 0.0 && r.truncation_gap < 1e-10;
  return r;
}

double CouplingIdentityResult::combined_se() const {
  return std::sqrt(lhs_se * lhs_se + rhs_se * rhs_se);
}

bool CouplingIdentityResult::agree(double k) const {
  const double se = combined_se();
  if (se == 0.0) return std::fabs(lhs - rhs) <= 1e-12;
  return std::fabs(lhs - rhs) <= k * se;
}

CouplingIdentityResult check_coupling_identity(
    const ModelSpec& model, double x, double x_prime, int n,
    const std::function<double(double, double)>& phi, long long replicates,
    RngStream& rng) {
  if (n < 1) throw std::invalid_argument("identity check needs n >= 1");
  if (replicates < 2) throw std::invalid_argument("need >= 2 replicates");
  std::vector<double> lhs_samples(replicates), rhs_samples(replicates);
  for (long long rep = 0; rep < replicates; ++rep) {
    const auto path = simulate_coupled(model, x, x_prime, n, rng);
    const bool survived = !path.t_fail.has_value() || *path.t_fail > n;
    lhs_samples[rep] =
        survived ? phi(path.x[n], path.x_prime[n]) : 0.0;
  }
  for (long long rep = 0; rep < replicates; ++rep) {
    const auto path = simulate_qsharp(model, x, x_prime, n, rng);
    double weight = 1.0;
    for (int i = 0; i < n; ++i) {
      weight *= coupling_alpha(model, path.x[i], path.x_prime[i]);
    }
    rhs_samples[rep] = weight * phi(path.x[n], path.x_prime[n]);
  }
  CouplingIdentityResult res;
  res.replicates = replicates;
  const MeanVar l = mean_var(lhs_samples);
  const MeanVar r = mean_var(rhs_samples);
  res.lhs = l.mean;
  res.lhs_se = l.se_mean();
  res.rhs = r.mean;
  res.rhs_se = r.se_mean();
  return res;
}

StationaryMomentResult check_stationary_moment(const ModelSpec& model,
                                               double lambda, double beta,
                                               long long horizon,
                                               RngStream& rng,
                                               long long burn_in) {
  if (!(lambda > 0.0 && lambda < 1.0) || !(beta >= 0.0)) {
    throw std::invalid_argument("need lambda in (0,1) and beta >= 0");
  }
  if (horizon < 1000) throw std::invalid_argument("horizon too short");
  const auto traj = simulate(model, default_initial_state(model), horizon, rng,
                             burn_in);
  std::vector<double> v(traj.x.size());
  const bool exp_v = model.family() == Family::loglinear;
  for (std::size_t i = 0; i < traj.x.size(); ++i) {
    v[i] = exp_v ? std::exp(std::fabs(traj.x[i])) : traj.x[i];
  }
  StationaryMomentResult r;
  r.horizon = horizon;
  r.empirical = mean_var(v).mean;
  r.se = batch_means_se(v, 100);
  r.bound = beta / (1.0 - lambda);
  r.verdict = r.empirical <= r.bound + 3.0 * r.se;
  return r;
}

bool VerifyReport::all_pass() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const ConditionResult& c) { return c.pass; });
}

std::string VerifyReport::render() const {
  std::ostringstream os;
  os << "odts verify report\n";
  os << "family: " << family_name(family) << "\n";
  os << "theta:";
  for (std::size_t i = 0; i < theta.size(); ++i) {
    os << ' ' << coord_names[i] << '=' << fmt_double(theta[i]);
  }
  os << "\nconditions: " << conditions.size() << "\n";
  for (const auto& c : conditions) {
    os << '[' << c.name << "]\n";
    for (const auto& [k, v] : c.details) os << "  " << k << ": " << v << '\n';
    os << "  verdict: " << (c.pass ? "pass" : "fail") << '\n';
  }
  os << "overall: " << (all_pass() ? "pass" : "fail") << '\n';
  return os.str();
}

namespace {

std::string fmt_pair(const StatePair& p) {
  return "(" + fmt_double(p.first) + ", " + fmt_double(p.second) + ")";
}

ConditionResult drift_condition(const DriftReport& d) {
  ConditionResult c;
  c.name = "drift";
  c.pass = d.verdict;
  c.details = {{"grid_points", fmt_double(static_cast<double>(d.grid.size()))},
               {"tail_start", fmt_double(d.tail_start)},
               {"lambda_hat", fmt_double(d.lambda_hat)},
               {"beta_hat", fmt_double(d.beta_hat)},
               {"worst_tail_x", fmt_double(d.worst_tail_x)}};
  return c;
}

ConditionResult alpha_condition(const AlphaBoundReport& a) {
  ConditionResult c;
  c.name = "alpha_bound";
  c.pass = a.verdict;
  c.details = {{"pairs", fmt_double(static_cast<double>(a.pairs))},
               {"max_deficit", fmt_double(a.max_deficit)},
               {"worst_pair", fmt_pair(a.worst_pair)}};
  return c;
}

ConditionResult contraction_condition(const QSharpContractionReport& q) {
  ConditionResult c;
  c.name = "qsharp_contraction";
  c.pass = q.verdict;
  c.details = {{"rho", fmt_double(q.rho)},
               {"max_identity_error", fmt_double(q.max_identity_error)},
               {"max_pathwise_factor", fmt_double(q.max_pathwise_factor)},
               {"max_expected_factor", fmt_double(q.max_expected_factor)},
               {"replicates", fmt_double(static_cast<double>(q.replicates))}};
  return c;
}

ConditionResult identity_condition(const CouplingIdentityResult& id) {
  ConditionResult c;
  c.name = "coupling_identity";
  c.pass = id.agree();
  c.details = {{"lhs", fmt_double(id.lhs)},
               {"lhs_se", fmt_double(id.lhs_se)},
               {"rhs", fmt_double(id.rhs)},
               {"rhs_se", fmt_double(id.rhs_se)},
               {"replicates", fmt_double(static_cast<double>(id.replicates))}};
  return c;
}

ConditionResult moment_condition(const ModelSpec& model, const DriftReport& d,
                                 const VerifyOptions& opt) {
  ConditionResult c;
  c.name = "stationary_moment";
  if (!d.verdict) {
    c.pass = false;
    c.details = {{"note", "no valid drift pair (lambda_hat >= 1)"}};
    return c;
  }
  RngStream rng(opt.seed, derive_stream_id(stream_purpose::verify_moment));
  try {
    const auto m = check_stationary_moment(model, d.lambda_hat, d.beta_hat,
                                           opt.moment_horizon, rng, opt.burn_in);
    c.pass = m.verdict;
    c.details = {{"empirical_piV", fmt_double(m.empirical)},
                 {"se", fmt_double(m.se)},
                 {"bound", fmt_double(m.bound)},
                 {"horizon", fmt_double(static_cast<double>(m.horizon))}};
  } catch (const DivergenceError& e) {
    c.pass = false;
    c.details = {{"note", std::string("divergence: ") + e.what()}};
  }
  return c;
}

}  // namespace

VerifyReport run_verification(const ModelSpec& model, const VerifyOptions& opt) {
  VerifyReport rep;
  rep.family = model.family();
  if (rep.family == Family::garch) {
    throw ConfigError("verify supports the threshold and loglinear families");
  }
  RngStream mc(opt.seed, derive_stream_id(stream_purpose::verify_mc));

  if (rep.family == Family::threshold) {
    const auto& p = model.threshold();
    rep.coord_names = {"omega", "a", "b", "c", "d", "L", "U"};
    rep.theta = {p.omega, p.a, p.b, p.c, p.d, p.L, p.U};

    // With U = inf and L < 1 the indicator fires only at Y = 0, so the
    // expected one-step slope a + c e^{-omega} can certify contraction in
    // mean even when a + c >= 1.
    const bool zero_only_indicator = std::isinf(p.U) && p.L < 1.0;
    const double mean_slope_bound = p.a + p.c * std::exp(-p.omega);
    ConditionResult coeff;
    coeff.name = "contraction_coefficient";
    coeff.pass = p.rho() < 1.0 || (zero_only_indicator && mean_slope_bound < 1.0);
    coeff.details = {{"rho", fmt_double(p.rho())},
                     {"mean_slope_bound", fmt_double(mean_slope_bound)},
                     {"zero_only_indicator", zero_only_indicator ? "yes" : "no"}};
    rep.conditions.push_back(coeff);

    rep.conditions.push_back(alpha_condition(
        check_alpha_bound(model, default_alpha_grid(Family::threshold))));
    // Contraction pairs live in the reachable set [omega, inf).
    std::vector<StatePair> reach;
    for (int i = 0; i <= 28; ++i) {
      for (int j = 0; j <= 28; ++j) {
        reach.emplace_back(p.omega + 0.25 * i, p.omega + 0.25 * j);
      }
    }
    rep.conditions.push_back(contraction_condition(
        check_qsharp_contraction(model, reach, opt.qsharp_replicates, mc)));
    const auto drift = drift_report_threshold(p);
    rep.conditions.push_back(drift_condition(drift));
    rep.conditions.push_back(moment_condition(model, drift, opt));
    const auto phi = [](double a, double b) {
      return std::min(std::fabs(a - b), 10.0);
    };
    rep.conditions.push_back(identity_condition(check_coupling_identity(
        model, 1.0, 2.0, 3, phi, opt.identity_replicates, mc)));
    return rep;
  }

  const auto& p = model.loglinear();
  rep.coord_names = {"d", "a", "b"};
  rep.theta = {p.d, p.a, p.b};

  ConditionResult coeff;
  coeff.name = "contraction_coefficient";
  coeff.pass = p.gamma() < 1.0;
  coeff.details = {{"gamma", fmt_double(p.gamma())}};
  rep.conditions.push_back(coeff);

  const auto grid = default_alpha_grid(Family::loglinear);
  rep.conditions.push_back(alpha_condition(check_alpha_bound(model, grid)));
  rep.conditions.push_back(contraction_condition(
      check_qsharp_contraction(model, grid, opt.qsharp_replicates, mc)));
  rep.conditions.push_back([&] {
    const auto w = check_qsharp_w_drift(p, default_qsharp_w_grid());
    ConditionResult c;
    c.name = "qsharp_w_drift";
    c.pass = w.verdict;
    c.details = {{"pairs", fmt_double(static_cast<double>(w.pairs))},
                 {"max_bound_violation", fmt_double(w.max_bound_violation)},
                 {"worst_pair", fmt_pair(w.worst_pair)},
                 {"beta_hat", fmt_double(w.beta_hat)},
                 {"truncation_gap", fmt_double(w.truncation_gap)}};
    return c;
  }());
  const auto drift = drift_report_loglinear(p);
  rep.conditions.push_back(drift_condition(drift));
  rep.conditions.push_back(moment_condition(model, drift, opt));
  const auto phi = [](double a, double b) {
    return std::min(std::fabs(a - b), 10.0);
  };
  rep.conditions.push_back(identity_condition(check_coupling_identity(
      model, 0.0, 0.5, 3, phi, opt.identity_replicates, mc)));
  return rep;
}

}  // namespace odts
