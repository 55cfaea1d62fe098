#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "odts/models.hpp"
#include "odts/simulate.hpp"
#include "odts/stats.hpp"

using namespace odts;

namespace {

ThresholdParams th(double omega, double a, double b, double c, double d,
                   double L, double U) {
  ThresholdParams p;
  p.omega = omega; p.a = a; p.b = b; p.c = c; p.d = d; p.L = L; p.U = U;
  return p;
}

}  // namespace

TEST_CASE("constant link pins the threshold chain at omega") {
  RngStream rng(1, 1);
  const auto m = make_threshold(th(1, 0, 0, 0, 0, 1, 3));
  const auto traj = simulate(m, 5.0, 50, rng, 0);
  CHECK(traj.x[0] == 5.0);
  for (std::size_t k = 1; k < traj.x.size(); ++k) CHECK(traj.x[k] == 1.0);
}

TEST_CASE("replaying observations through iterate_link reproduces the states") {
  RngStream rng(2, 2);
  const auto families = std::vector<ModelSpec>{
      make_threshold(th(1, 0.3, 0.2, 0.2, 0.1, 1, 3)),
      make_loglinear({0.5, 0.3, 0.4}),
      make_garch({0.2, 0.4, 0.3}),
  };
  for (const auto& m : families) {
    const auto traj = simulate(m, default_initial_state(m), 200, rng, 100);
    for (std::size_t k = 0; k < traj.y.size(); ++k) {
      const std::span<const double> prefix(traj.y.data(), k + 1);
      CHECK(iterate_link(m, traj.x[0], prefix) == traj.x[k + 1]);
    }
  }
}

TEST_CASE("stable log-linear time averages settle between halves") {
  RngStream rng(3, 3);
  const auto m = make_loglinear({0.5, 0.3, 0.4});
  const auto traj = simulate(m, default_initial_state(m), 100000, rng, 1000);
  const std::size_t half = traj.x.size() / 2;
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < half; ++i) a += traj.x[i];
  for (std::size_t i = half; i < traj.x.size(); ++i) b += traj.x[i];
  a /= static_cast<double>(half);
  b /= static_cast<double>(traj.x.size() - half);
  CHECK(std::fabs(a - b) < 0.05);
}

TEST_CASE("coupled chains from equal starts never decouple") {
  RngStream rng(4, 4);
  for (const auto& m : {make_threshold(th(1, 0.3, 0.2, 0.2, 0.1, 1, 3)),
                        make_loglinear({0.5, 0.3, 0.4})}) {
    const auto path = simulate_coupled(m, 2.0, 2.0, 100, rng);
    CHECK_FALSE(path.t_fail.has_value());
    for (auto u : path.u) CHECK(u == 1);
    CHECK(path.x == path.x_prime);
  }
}

TEST_CASE("one-step coincidence probability matches exp(-|x - x'|)") {
  RngStream rng(5, 5);
  const auto m = make_threshold(th(1, 0.3, 0.2, 0.2, 0.1, 1, 3));
  const int reps = 10000;
  int coins = 0;
  for (int r = 0; r < reps; ++r) {
    const auto path = simulate_coupled(m, 1.0, 2.0, 1, rng);
    coins += path.u[0];
  }
  const double p = std::exp(-1.0);
  const double se = std::sqrt(p * (1 - p) / reps);
  CHECK(std::fabs(static_cast<double>(coins) / reps - p) < 5.0 * se);
}

TEST_CASE("coupled coordinate marginals match single-chain simulation") {
  RngStream rng(6, 6);
  const auto m = make_loglinear({0.5, 0.3, 0.4});
  const int reps = 20000, n = 3;
  std::vector<double> coupled_first(reps), coupled_second(reps),
      single_first(reps), single_second(reps);
  for (int r = 0; r < reps; ++r) {
    const auto path = simulate_coupled(m, 0.0, 1.0, n, rng);
    coupled_first[r] = path.x[n];
    coupled_second[r] = path.x_prime[n];
  }
  for (int r = 0; r < reps; ++r) {
    single_first[r] = simulate(m, 0.0, n, rng, 0).x[n];
    single_second[r] = simulate(m, 1.0, n, rng, 0).x[n];
  }
  CHECK(two_sample_ks(coupled_first, single_first) < ks_threshold(reps, reps));
  CHECK(two_sample_ks(coupled_second, single_second) < ks_threshold(reps, reps));
}

TEST_CASE("shared-innovation log-linear gaps contract exactly by |a|^k") {
  RngStream rng(7, 7);
  const LogLinearParams p{0.5, -0.6, 0.4};
  const auto m = make_loglinear(p);
  for (int r = 0; r < 200; ++r) {
    const double x0 = -1.0 + 2.0 * rng.next_double();
    const double x0p = x0 + rng.next_double();
    const auto path = simulate_qsharp(m, x0, x0p, 6, rng);
    CHECK_FALSE(path.t_fail.has_value());
    for (int k = 0; k <= 6; ++k) {
      const double expected = std::pow(std::fabs(p.a), k) * std::fabs(x0 - x0p);
      CHECK(std::fabs(path.x[k] - path.x_prime[k]) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("shared-innovation threshold one-step factor is two-valued") {
  RngStream rng(8, 8);
  const auto p = th(1, 0.3, 0.2, 0.2, 0.1, 1, 3);
  const auto m = make_threshold(p);
  bool saw_low = false, saw_high = false;
  for (int r = 0; r < 2000; ++r) {
    const auto path = simulate_qsharp(m, 1.0, 2.5, 1, rng);
    const double factor = std::fabs(path.x[1] - path.x_prime[1]) / 1.5;
    const bool low = std::fabs(factor - p.a) < 1e-12;
    const bool high = std::fabs(factor - (p.a + p.c)) < 1e-12;
    CHECK((low || high));
    saw_low = saw_low || low;
    saw_high = saw_high || high;
  }
  CHECK(saw_low);
  CHECK(saw_high);
}

TEST_CASE("qsharp from equal starts gives identical paths") {
  RngStream rng(9, 9);
  const auto m = make_loglinear({0.5, 0.3, 0.4});
  const auto path = simulate_qsharp(m, 0.7, 0.7, 50, rng);
  CHECK(path.x == path.x_prime);
}

TEST_CASE("variant with U = inf: expected one-step contraction by exact sums") {
  // indicator fires only at y = 0, so the expected slope is a + c e^{-rate}
  const auto p = th(1, 0.3, 0.2, 0.9, 0.1, 0.5, INFINITY);
  const auto m = make_threshold(p);
  const double lambda = 1.0;  // x ^ x' for the pair (1, 2)
  double expected = 0.0;
  for (long long y = 0; y <= poisson_tail_cutoff(lambda); ++y) {
    const double w = std::exp(poisson_log_pmf(lambda, y));
    expected += w * p.slope(static_cast<double>(y));
  }
  CHECK(expected ==
        doctest::Approx(p.a + p.c * std::exp(-lambda)).epsilon(1e-12));
  CHECK(expected <= p.a + p.c * std::exp(-p.omega) + 1e-12);
  // Monte Carlo agreement of the pathwise mean
  RngStream rng(10, 10);
  const int reps = 40000;
  std::vector<double> factors(reps);
  for (int r = 0; r < reps; ++r) {
    const auto path = simulate_qsharp(m, 1.0, 2.0, 1, rng);
    factors[r] = std::fabs(path.x[1] - path.x_prime[1]);
  }
  const MeanVar mv = mean_var(factors);
  CHECK(std::fabs(mv.mean - expected) < 5.0 * mv.se_mean());
}

TEST_CASE("divergent parameters raise a divergence error naming the step") {
  RngStream rng(11, 11);
  const auto g = make_garch({1.0, 2.0, 1.0});
  long long step = -1;
  try {
    simulate(g, 1.0, 1000, rng, 0);
  } catch (const DivergenceError& e) {
    step = e.step;
    CHECK(std::string(e.what()).find(std::to_string(step)) != std::string::npos);
  }
  CHECK(step > 0);
  CHECK(step < 100);
  RngStream rng2(12, 12);
  CHECK_THROWS_AS(simulate(make_loglinear({30.0, 0.5, 0.5}), 30.0, 10, rng2, 0),
                  DivergenceError);
}

TEST_CASE("trajectory CSV serialization is deterministic with 17-digit states") {
  RngStream a(13, 13), b(13, 13);
  const auto m = make_loglinear({0.5, 0.3, 0.4});
  const auto t1 = simulate(m, 0.0, 25, a, 10);
  const auto t2 = simulate(m, 0.0, 25, b, 10);
  std::ostringstream s1, s2;
  write_trajectory_csv(s1, t1);
  write_trajectory_csv(s2, t2);
  CHECK(s1.str() == s2.str());
  CHECK(s1.str().substr(0, 6) == "k,x,y\n");
  CHECK(s1.str().find("0,") == 6);
}

TEST_CASE("t_fail is the first zero coin") {
  RngStream rng(14, 14);
  const auto m = make_threshold(th(1, 0.3, 0.2, 0.2, 0.1, 1, 3));
  for (int r = 0; r < 50; ++r) {
    const auto path = simulate_coupled(m, 1.0, 6.0, 40, rng);
    if (path.t_fail) {
      const long long t = *path.t_fail;
      for (long long i = 1; i < t; ++i) CHECK(path.u[i - 1] == 1);
      CHECK(path.u[t - 1] == 0);
    } else {
      for (auto u : path.u) CHECK(u == 1);
    }
  }
}

TEST_CASE("burn-in discards a prefix without disturbing the stream") {
  const auto m = make_loglinear({0.5, 0.3, 0.4});
  RngStream a(16, 16), b(16, 16);
  const auto burned = simulate(m, 0.25, 40, a, 150);
  const auto full = simulate(m, 0.25, 190, b, 0);
  CHECK(std::vector<double>(full.y.end() - 40, full.y.end()) == burned.y);
  CHECK(std::vector<double>(full.x.end() - 41, full.x.end()) == burned.x);
}

TEST_CASE("garch has no coupled construction") {
  RngStream rng(15, 15);
  CHECK_THROWS_AS(simulate_coupled(make_garch({0.1, 0.2, 0.3}), 1, 2, 5, rng),
                  std::domain_error);
}
