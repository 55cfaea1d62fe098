#include "odts/mle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <thread>

#include "odts/simulate.hpp"
#include "odts/stats.hpp"

namespace odts {

namespace {

constexpr double kBadObjective = 1e300;
constexpr int kStartPoolSize = 64;

struct NmOptions {
  double simplex_edge = 0.05;
  double diameter_tol = 1e-7;
  double spread_tol = 1e-10;
  int max_iterations = 5000;
};

struct NmResult {
  std::vector<double> z;
  double f = kBadObjective;
  bool converged = false;
  long long iterations = 0;
};

// Minimizes f over scaled coordinates; feasibility is the objective's job
// (it projects before evaluating).
NmResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                     std::span<const double> z0, const NmOptions& opt) {
  const std::size_t d = z0.size();
  std::vector<std::vector<double>> simplex;
  simplex.reserve(d + 1);
  simplex.emplace_back(z0.begin(), z0.end());
  for (std::size_t i = 0; i < d; ++i) {
    auto v = simplex[0];
    v[i] += (v[i] + opt.simplex_edge <= 1.0) ? opt.simplex_edge
                                             : -opt.simplex_edge;
    simplex.push_back(std::move(v));
  }
  std::vector<double> fv(d + 1);
  for (std::size_t i = 0; i <= d; ++i) fv[i] = f(simplex[i]);

  NmResult res;
  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), cand(d);
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    res.iterations = iter;
    for (std::size_t i = 0; i <= d; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order[0], worst = order[d], second = order[d - 1];

    double diameter = 0.0;
    for (std::size_t i = 1; i <= d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        diameter = std::max(diameter,
                            std::fabs(simplex[order[i]][j] - simplex[best][j]));
      }
    }
    if (diameter < opt.diameter_tol && fv[worst] - fv[best] < opt.spread_tol) {
      res.converged = true;
      break;
    }

    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i <= d; ++i) {
        if (i != worst) s += simplex[i][j];
      }
      centroid[j] = s / static_cast<double>(d);
    }

    auto blend = [&](double t) {
      for (std::size_t j = 0; j < d; ++j) {
        cand[j] = centroid[j] + t * (centroid[j] - simplex[worst][j]);
      }
      return f(cand);
    };

    const double fr = blend(1.0);  // reflection
    if (fr < fv[best]) {
      const std::vector<double> refl = cand;
      const double fe = blend(2.0);  // expansion
      if (fe < fr) {
        simplex[worst] = cand;
        fv[worst] = fe;
      } else {
        simplex[worst] = refl;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = cand;
      fv[worst] = fr;
      continue;
    }
    const double fc = blend(fr < fv[worst] ? 0.5 : -0.5);  // contraction
    if (fc < std::min(fr, fv[worst])) {
      simplex[worst] = cand;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= d; ++i) {  // shrink toward the best vertex
      if (i == best) continue;
      for (std::size_t j = 0; j < d; ++j) {
        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
      }
      fv[i] = f(simplex[i]);
    }
  }

  std::size_t arg = 0;
  for (std::size_t i = 1; i <= d; ++i) {
    if (fv[i] < fv[arg]) arg = i;
  }
  res.z = simplex[arg];
  res.f = fv[arg];
  return res;
}

int worker_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Index-partitioned parallel for with deterministic output slots. The first
// worker exception (by task index) is rethrown after the join.
void parallel_for(long long count, const std::function<void(long long)>& body) {
  const int workers = std::min<long long>(worker_count(), count);
  if (workers <= 1) {
    for (long long i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (long long i = w; i < count; i += workers) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

double default_fit_x0(const ParameterSpace& space) {
  const auto c = space.center();
  const ModelSpec model = space.model_from_theta(c);
  double x0 = default_initial_state(model);
  if (space.family == Family::threshold) x0 = std::max(x0, space.alpha_floor);
  return x0;
}

FitResult fit(const ParameterSpace& space, std::span<const double> y,
              double x0, int starts, RngStream& rng,
              std::span<const std::vector<double>> given_starts) {
  space.validate();
  if (starts < 1) throw std::invalid_argument("need at least one start");
  const ModelSpec probe = space.model_from_theta(space.center());
  const auto prepared = detail::prepare_series(probe, y);

  FitResult out;
  out.n = static_cast<long long>(y.size());
  out.starts = starts;
  if (prepared.all_zero) out.flags.push_back("degenerate_all_zero");
  if (prepared.constant) out.flags.push_back("degenerate_constant_series");

  if (std::isnan(x0)) x0 = default_fit_x0(space);
  if (space.family == Family::threshold && x0 < space.alpha_floor) {
    x0 = space.alpha_floor;
    out.flags.push_back("x0_clipped_to_alpha_floor");
  }

  const std::size_t d = space.dim();
  std::vector<double> width(d);
  for (std::size_t i = 0; i < d; ++i) {
    width[i] = std::max(space.upper[i] - space.lower[i], 1e-12);
  }
  auto to_theta = [&](std::span<const double> z) {
    std::vector<double> t(d);
    for (std::size_t i = 0; i < d; ++i) t[i] = space.lower[i] + width[i] * z[i];
    return space.project(t);
  };
  auto objective = [&](std::span<const double> z) {
    const auto theta = to_theta(z);
    double v;
    if (space.family == Family::threshold) {
      ThresholdParams p{theta[0], theta[1], theta[2], theta[3], theta[4],
                        space.threshold_L, space.threshold_U};
      v = detail::loglik_threshold_prepared(p, x0, prepared);
    } else {
      LogLinearParams p{theta[0], theta[1], theta[2]};
      v = detail::loglik_loglinear_prepared(p, x0, prepared);
    }
    return std::isfinite(v) ? -v : kBadObjective;
  };

  // Fixed-size start pool keeps the multistart prefix property.
  std::vector<std::vector<double>> pool;
  if (given_starts.empty()) {
    pool = latin_hypercube(space, kStartPoolSize, rng);
    while (static_cast<int>(pool.size()) < starts) {
      std::vector<double> t(d);
      for (std::size_t i = 0; i < d; ++i) {
        t[i] = space.lower[i] + width[i] * rng.next_double();
      }
      pool.push_back(space.project(t));
    }
  } else {
    for (const auto& s : given_starts) pool.push_back(space.project(s));
    starts = std::min<int>(starts, static_cast<int>(pool.size()));
    out.starts = starts;
  }

  NmOptions nm_opt;
  double best_f = std::numeric_limits<double>::infinity();
  std::vector<double> best_z;
  bool best_converged = false;
  for (int s = 0; s < starts; ++s) {
    std::vector<double> z0(d);
    for (std::size_t i = 0; i < d; ++i) {
      z0[i] = (pool[s][i] - space.lower[i]) / width[i];
    }
    const NmResult r = nelder_mead(objective, z0, nm_opt);
    out.iterations += r.iterations;
    out.start_objectives.push_back(r.f >= kBadObjective
                                       ? -std::numeric_limits<double>::infinity()
                                       : -r.f);
    if (r.f < best_f) {  // strict: earlier start wins ties
      best_f = r.f;
      best_z = r.z;
      best_converged = r.converged;
    }
  }

  out.theta_hat = to_theta(best_z);
  out.converged = best_converged;
  const ModelSpec model = space.model_from_theta(out.theta_hat);
  out.loglik = conditional_loglik(model, x0, y).value;
  out.active_constraints = space.active_constraints(out.theta_hat);
  return out;
}

namespace {

ConsistencyReport run_experiment_grid(const ModelSpec& generator,
                                      const ParameterSpace& space,
                                      std::span<const long long> n_grid,
                                      int replicates, std::uint64_t seed,
                                      int starts, long long burn_in,
                                      bool well_specified) {
  space.validate();
  generator.validate();
  if (n_grid.empty()) throw ConfigError("experiment needs a nonempty n grid");
  if (replicates < 2) throw ConfigError("experiment needs >= 2 replicates");
  for (long long n : n_grid) {
    if (n < 10) throw ConfigError("experiment n values must be >= 10");
  }

  ConsistencyReport rep;
  rep.generator = generator;
  rep.space = space;
  rep.n_grid.assign(n_grid.begin(), n_grid.end());
  rep.replicates = replicates;
  rep.seed = seed;
  rep.starts = starts;

  if (well_specified) {
    if (generator.family() != space.family) {
      throw ConfigError("consistency experiment needs matching families");
    }
    auto theta_star = space.theta_from_model(generator);
    if (!space.feasible(theta_star, 1e-12)) {
      throw ConfigError("theta_star is infeasible in the given space");
    }
    if (space.family == Family::threshold) {
      const auto& g = generator.threshold();
      if (g.L != space.threshold_L || g.U != space.threshold_U) {
        throw ConfigError("space (L,U) must match the generator interval");
      }
      if (!has_integer_strictly_inside(g.L, g.U)) {
        throw ConfigError(
            "identifiability needs an integer strictly inside (L, U)");
      }
    }
    rep.theta_star = std::move(theta_star);
  } else {
    if (generator.family() == space.family) {
      throw ConfigError("misspecification experiment needs distinct families");
    }
    // Generator stability gate (its own ergodicity hypotheses).
    if (generator.family() == Family::loglinear &&
        !(generator.loglinear().gamma() < 1.0)) {
      throw ConfigError("loglinear generator is not in the stable region");
    }
    if (generator.family() == Family::threshold) {
      const auto& g = generator.threshold();
      if (!(std::max(g.a, g.a + g.b + g.c + g.d) < 1.0)) {
        throw ConfigError("threshold generator is not in the stable region");
      }
    }
    if (generator.family() == Family::garch) {
      throw ConfigError("experiments fit count families only");
    }
  }

  const double gen_x0 = default_initial_state(generator);
  const double fit_x0 = default_fit_x0(space);
  const long long tasks =
      static_cast<long long>(rep.n_grid.size()) * replicates;
  rep.rows.resize(tasks);
  parallel_for(tasks, [&](long long t) {
    const std::size_t ni = static_cast<std::size_t>(t) / replicates;
    const int rep_i = static_cast<int>(t % replicates);
    const long long n = rep.n_grid[ni];
    RngStream traj_rng(seed,
                       derive_stream_id(stream_purpose::experiment_traj, ni,
                                        static_cast<std::uint64_t>(rep_i)));
    const Trajectory traj = simulate(generator, gen_x0, n, traj_rng, burn_in);
    RngStream fit_rng(seed,
                      derive_stream_id(stream_purpose::experiment_fit, ni,
                                       static_cast<std::uint64_t>(rep_i)));
    const FitResult f = fit(space, traj.y, fit_x0, starts, fit_rng);
    ExperimentRow row;
    row.n = n;
    row.replicate = rep_i;
    row.traj_stream = traj_rng.stream_id();
    row.estimate = f.theta_hat;
    row.loglik = f.loglik;
    row.converged = f.converged;
    rep.rows[t] = std::move(row);
  });

  const std::size_t d = space.dim();
  rep.median_estimate.assign(rep.n_grid.size(), std::vector<double>(d));
  rep.iqr_estimate.assign(rep.n_grid.size(), std::vector<double>(d));
  if (rep.theta_star) {
    rep.median_abs_error.assign(rep.n_grid.size(), std::vector<double>(d));
  }
  for (std::size_t ni = 0; ni < rep.n_grid.size(); ++ni) {
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<double> est;
      est.reserve(replicates);
      for (int r = 0; r < replicates; ++r) {
        est.push_back(rep.rows[ni * replicates + r].estimate[j]);
      }
      rep.median_estimate[ni][j] = median(est);
      rep.iqr_estimate[ni][j] = interquartile_range(est);
      if (rep.theta_star) {
        std::vector<double> errs;
        errs.reserve(replicates);
        for (double e : est) errs.push_back(std::fabs(e - (*rep.theta_star)[j]));
        rep.median_abs_error[ni][j] = median(errs);
      }
    }
  }

  rep.median_error_nonincreasing = true;
  rep.iqr_shrinking = true;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t ni = 1; ni < rep.n_grid.size(); ++ni) {
      if (rep.theta_star &&
          rep.median_abs_error[ni][j] > rep.median_abs_error[ni - 1][j]) {
        rep.median_error_nonincreasing = false;
      }
    }
    if (rep.iqr_estimate.back()[j] >= rep.iqr_estimate.front()[j]) {
      rep.iqr_shrinking = false;
    }
  }
  if (!rep.theta_star) rep.median_error_nonincreasing = false;
  return rep;
}

}  // namespace

ConsistencyReport consistency_experiment(const ModelSpec& generator,
                                         const ParameterSpace& space,
                                         std::span<const long long> n_grid,
                                         int replicates, std::uint64_t seed,
                                         int starts, long long burn_in) {
  return run_experiment_grid(generator, space, n_grid, replicates, seed,
                             starts, burn_in, true);
}

ConsistencyReport misspecification_experiment(const ModelSpec& generator,
                                              const ParameterSpace& space,
                                              std::span<const long long> n_grid,
                                              int replicates,
                                              std::uint64_t seed, int starts,
                                              long long burn_in) {
  return run_experiment_grid(generator, space, n_grid, replicates, seed,
                             starts, burn_in, false);
}

void write_consistency_csv(std::ostream& os, const ConsistencyReport& report) {
  os << "family,n,replicate,seed,coord,estimate,truth\n";
  const auto names = report.space.coord_names();
  for (const auto& row : report.rows) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      os << family_name(report.space.family) << ',' << row.n << ','
         << row.replicate << ',' << row.traj_stream << ',' << names[j] << ','
         << fmt_double(row.estimate[j]) << ',';
      if (report.theta_star) os << fmt_double((*report.theta_star)[j]);
      os << '\n';
    }
  }
}

nlohmann::ordered_json consistency_summary_json(const ConsistencyReport& report) {
  nlohmann::ordered_json j;
  j["generator_family"] = family_name(report.generator.family());
  j["fit_family"] = family_name(report.space.family);
  j["coords"] = report.space.coord_names();
  if (report.theta_star) j["theta_star"] = *report.theta_star;
  j["n_grid"] = report.n_grid;
  j["replicates"] = report.replicates;
  j["seed"] = report.seed;
  j["starts"] = report.starts;
  nlohmann::ordered_json per_n = nlohmann::ordered_json::array();
  for (std::size_t ni = 0; ni < report.n_grid.size(); ++ni) {
    nlohmann::ordered_json e;
    e["n"] = report.n_grid[ni];
    e["median_estimate"] = report.median_estimate[ni];
    e["iqr"] = report.iqr_estimate[ni];
    if (report.theta_star) e["median_abs_error"] = report.median_abs_error[ni];
    per_n.push_back(e);
  }
  j["per_n"] = per_n;
  nlohmann::ordered_json verdicts;
  if (report.theta_star) {
    verdicts["median_error_nonincreasing"] = report.median_error_nonincreasing;
  }
  verdicts["iqr_shrinking"] = report.iqr_shrinking;
  j["verdicts"] = verdicts;
  return j;
}

nlohmann::ordered_json fit_summary_json(const ParameterSpace& space,
                                        const FitResult& fit) {
  nlohmann::ordered_json j;
  j["family"] = family_name(space.family);
  j["coords"] = space.coord_names();
  j["theta_hat"] = fit.theta_hat;
  j["loglik"] = fit.loglik;
  j["n"] = fit.n;
  j["starts"] = fit.starts;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["active_constraints"] = fit.active_constraints;
  j["flags"] = fit.flags;
  j["start_objectives"] = fit.start_objectives;
  return j;
}

LipschitzReport lipschitz_condition_check(const ParameterSpace& space,
                                          const ModelSpec& sampler_model,
                                          long long samples, RngStream& rng) {
  space.validate();
  if (sampler_model.family() != space.family) {
    throw std::invalid_argument("sampler model must match the space family");
  }
  if (samples < 10) throw std::invalid_argument("need >= 10 samples");
  const auto traj =
      simulate(sampler_model, default_initial_state(sampler_model),
               samples + 1, rng, 500);
  const auto thetas = latin_hypercube(space, 32, rng);
  LipschitzReport rep;
  rep.rho_bar = space.stability_margin;
  rep.samples = samples;
  for (long long i = 0; i < samples; ++i) {
    const double y = traj.y[static_cast<std::size_t>(i)];
    const double x = traj.x[static_cast<std::size_t>(i)];
    const double xp =
        traj.x[static_cast<std::size_t>(rng.next_double() * samples)];
    if (x == xp) continue;
    const auto& theta = thetas[static_cast<std::size_t>(i) % thetas.size()];
    const ModelSpec m = space.model_from_theta(theta);
    const double ratio =
        std::fabs(link(m, x, y) - link(m, xp, y)) / std::fabs(x - xp);
    if (std::isfinite(ratio)) rep.max_ratio = std::max(rep.max_ratio, ratio);
  }
  rep.mean_log_rho = std::log(rep.rho_bar);
  rep.verdict = rep.max_ratio <= rep.rho_bar + 1e-12 && rep.mean_log_rho < 0.0;
  return rep;
}

}  // namespace odts
