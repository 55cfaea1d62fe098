#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "odts/mle.hpp"
#include "odts/simulate.hpp"

using namespace odts;

namespace {

ThresholdParams th(double omega, double a, double b, double c, double d,
                   double L, double U) {
  ThresholdParams p;
  p.omega = omega; p.a = a; p.b = b; p.c = c; p.d = d; p.L = L; p.U = U;
  return p;
}

std::vector<double> sim_loglinear(int n, std::uint64_t seed) {
  RngStream rng(seed, 1);
  const auto m = make_loglinear({0.5, 0.3, 0.4});
  return simulate(m, default_initial_state(m), n, rng, 500).y;
}

}  // namespace

TEST_CASE("fit recovers the generator at moderate n") {
  const auto y = sim_loglinear(4000, 71);
  const auto space = default_space(Family::loglinear, SpaceVariant::loglinear_stable);
  RngStream rng(72, 2);
  const auto f = fit(space, y, NAN, 8, rng);
  CHECK(f.converged);
  CHECK(std::fabs(f.theta_hat[0] - 0.5) < 0.15);
  CHECK(std::fabs(f.theta_hat[1] - 0.3) < 0.15);
  CHECK(std::fabs(f.theta_hat[2] - 0.4) < 0.15);
  CHECK(space.feasible(f.theta_hat, 1e-12));
  // reported loglik is the re-evaluated conditional likelihood
  const auto model = space.model_from_theta(f.theta_hat);
  CHECK(std::fabs(f.loglik -
                  conditional_loglik(model, default_fit_x0(space), y).value) <
        1e-9);
}

TEST_CASE("refitting from theta_hat returns theta_hat") {
  const auto y = sim_loglinear(1500, 73);
  const auto space = default_space(Family::loglinear, SpaceVariant::loglinear_stable);
  RngStream rng(74, 2);
  const auto f = fit(space, y, NAN, 6, rng);
  RngStream rng2(74, 3);
  const std::vector<std::vector<double>> starts{f.theta_hat};
  const auto g = fit(space, y, NAN, 1, rng2, starts);
  CHECK(g.loglik >= f.loglik - 1e-10);
  for (std::size_t i = 0; i < f.theta_hat.size(); ++i) {
    CHECK(std::fabs(g.theta_hat[i] - f.theta_hat[i]) < 1e-4);
  }
}

TEST_CASE("all-zero series is flagged, not fatal") {
  const std::vector<double> y(300, 0.0);
  const auto space = default_space(Family::loglinear, SpaceVariant::loglinear_stable);
  RngStream rng(75, 2);
  const auto f = fit(space, y, NAN, 4, rng);
  bool flagged = false;
  for (const auto& s : f.flags) flagged = flagged || s == "degenerate_all_zero";
  CHECK(flagged);
  CHECK(space.feasible(f.theta_hat, 1e-12));
  CHECK(std::isfinite(f.loglik));
}

TEST_CASE("best objective is nondecreasing in the number of starts") {
  const auto y = sim_loglinear(800, 76);
  const auto space = default_space(Family::loglinear, SpaceVariant::loglinear_stable);
  double prev = -INFINITY;
  for (int starts : {1, 2, 4, 8}) {
    RngStream rng(77, 4);  // fresh identical stream per call
    const auto f = fit(space, y, NAN, starts, rng);
    CHECK(f.loglik >= prev - 1e-12);
    prev = std::max(prev, f.loglik);
  }
}

TEST_CASE("fit tracks the generator in at least 18 of 20 seed replicates") {
  const auto gen = make_loglinear({0.5, 0.3, 0.4});
  const auto space = default_space(Family::loglinear, SpaceVariant::loglinear_stable);
  const std::vector<long long> ns{5000};
  const auto rep = consistency_experiment(gen, space, ns, 20, 424242, 10, 1000);
  int hits = 0;
  for (const auto& row : rep.rows) {
    bool within = true;
    for (int j = 0; j < 3; ++j) {
      within = within && std::fabs(row.estimate[j] - rep.theta_star->at(j)) < 0.1;
    }
    hits += within;
  }
  CHECK(hits >= 18);
}

TEST_CASE("experiment reruns with one seed are bit-identical") {
  const auto gen = make_loglinear({0.5, 0.3, 0.4});
  const auto space = default_space(Family::loglinear, SpaceVariant::loglinear_stable);
  const std::vector<long long> ns{200, 600};
  const auto a = consistency_experiment(gen, space, ns, 3, 2024, 4, 300);
  const auto b = consistency_experiment(gen, space, ns, 3, 2024, 4, 300);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].estimate == b.rows[i].estimate);
    CHECK(a.rows[i].loglik == b.rows[i].loglik);
  }
  std::ostringstream csv_a, csv_b;
  write_consistency_csv(csv_a, a);
  write_consistency_csv(csv_b, b);
  CHECK(csv_a.str() == csv_b.str());
  CHECK(consistency_summary_json(a).dump() == consistency_summary_json(b).dump());
}

TEST_CASE("threshold consistency experiments demand an integer inside (L,U)") {
  auto space = default_space(Family::threshold, SpaceVariant::threshold_wellspecified);
  space.threshold_L = 0.4;
  space.threshold_U = 0.6;
  const auto gen = make_threshold(th(1, 0.2, 0.2, 0.2, 0.2, 0.4, 0.6));
  const std::vector<long long> ns{100};
  CHECK_THROWS_AS(consistency_experiment(gen, space, ns, 2, 1, 2, 100),
                  ConfigError);
  auto ok_space = default_space(Family::threshold, SpaceVariant::threshold_wellspecified);
  ok_space.threshold_L = 0.5;
  ok_space.threshold_U = 1.5;
  const auto ok_gen = make_threshold(th(1, 0.2, 0.2, 0.2, 0.2, 0.5, 1.5));
  CHECK_NOTHROW(consistency_experiment(ok_gen, ok_space, ns, 2, 1, 2, 100));
}

TEST_CASE("misspecified generators must be stable; same-family setups rejected") {
  const auto space = default_space(Family::threshold, SpaceVariant::threshold_misspecified);
  const std::vector<long long> ns{100};
  CHECK_THROWS_AS(
      misspecification_experiment(make_loglinear({0.0, 0.7, 0.7}), space, ns,
                                  2, 1, 2, 100),
      ConfigError);  // gamma = 1.4
  const auto gen_th = make_threshold(th(1, 0.2, 0.2, 0.2, 0.2, 1, 3));
  CHECK_THROWS_AS(misspecification_experiment(gen_th, space, ns, 2, 1, 2, 100),
                  ConfigError);  // same family
}

TEST_CASE("misspecification smoke run and argmax dominance over a grid") {
  const auto gen = make_loglinear({0.5, 0.3, 0.4});
  auto space = default_space(Family::threshold, SpaceVariant::threshold_misspecified);
  space.threshold_L = 0.5;
  space.threshold_U = 1.5;
  const std::vector<long long> ns{400, 1600};
  const auto rep = misspecification_experiment(gen, space, ns, 4, 31, 6, 500);
  CHECK(rep.rows.size() == 8);
  CHECK_FALSE(rep.theta_star.has_value());
  for (const auto& row : rep.rows) CHECK(space.feasible(row.estimate, 1e-9));

  // The fitted point must dominate a theta grid on the same objective.
  RngStream traj_rng(31, derive_stream_id(stream_purpose::experiment_traj, 1, 0));
  const auto traj = simulate(gen, default_initial_state(gen), 1600, traj_rng, 500);
  RngStream grid_rng(5150, 0);
  const auto grid = latin_hypercube(space, 256, grid_rng);
  const double x0 = default_fit_x0(space);
  double best_grid = -INFINITY;
  for (const auto& t : grid) {
    best_grid = std::max(
        best_grid,
        conditional_loglik(space.model_from_theta(t), x0, traj.y).value);
  }
  CHECK(rep.rows[4].loglik >= best_grid - 1e-9);
}

TEST_CASE("pathwise Lipschitz factors stay within the stability margin") {
  const auto space = default_space(Family::loglinear, SpaceVariant::loglinear_stable);
  RngStream rng(81, 0);
  const auto rep = lipschitz_condition_check(space, make_loglinear({0.5, 0.3, 0.4}),
                                             4000, rng);
  CHECK(rep.verdict);
  CHECK(rep.max_ratio <= rep.rho_bar + 1e-12);
  CHECK(rep.mean_log_rho == doctest::Approx(std::log(0.9)).epsilon(1e-12));

  auto tspace = default_space(Family::threshold, SpaceVariant::threshold_wellspecified);
  RngStream rng2(82, 0);
  const auto rep2 = lipschitz_condition_check(
      tspace, make_threshold(th(1, 0.2, 0.2, 0.2, 0.2, 1, 3)), 4000, rng2);
  CHECK(rep2.verdict);
}

TEST_CASE("distinct parameters produce distinct state paths on long series") {
  for (int variant = 0; variant < 2; ++variant) {
    const bool threshold = variant == 1;
    const auto space =
        threshold ? default_space(Family::threshold, SpaceVariant::threshold_wellspecified)
                  : default_space(Family::loglinear, SpaceVariant::loglinear_stable);
    const auto gen =
        threshold
            ? make_threshold(th(1, 0.2, 0.2, 0.2, 0.2, 1, 3))
            : make_loglinear({0.5, 0.3, 0.4});
    RngStream rng(83 + variant, 0);
    const auto traj = simulate(gen, default_initial_state(gen), 100000, rng, 500);
    RngStream grid_rng(84, 0);
    const auto grid = latin_hypercube(space, 16, grid_rng);
    const auto theta_star = space.theta_from_model(gen);
    double min_gap = INFINITY;
    for (const auto& t : grid) {
      bool same = true;
      for (std::size_t i = 0; i < t.size(); ++i) {
        same = same && std::fabs(t[i] - theta_star[i]) < 1e-12;
      }
      if (same) continue;
      const auto alt = space.model_from_theta(t);
      double x_star = default_fit_x0(space), x_alt = x_star;
      double max_diff = 0.0;
      for (double y : traj.y) {
        x_star = link(gen, x_star, y);
        x_alt = link(alt, x_alt, y);
        max_diff = std::max(max_diff, std::fabs(x_star - x_alt));
      }
      min_gap = std::min(min_gap, max_diff);
    }
    CHECK(min_gap > 1e-8);
  }
}
