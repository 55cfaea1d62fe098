#include "doctest.h"

#include <cmath>

#include "odts/space.hpp"

using namespace odts;

TEST_CASE("projection is idempotent") {
  RngStream rng(606, 0);
  for (Family fam : {Family::threshold, Family::loglinear}) {
    const auto space = default_space(
        fam, fam == Family::threshold ? SpaceVariant::threshold_wellspecified
                                      : SpaceVariant::loglinear_stable);
    for (int i = 0; i < 300; ++i) {
      std::vector<double> t(space.dim());
      for (std::size_t j = 0; j < t.size(); ++j) {
        t[j] = -2.0 + 5.0 * rng.next_double();
      }
      const auto once = space.project(t);
      const auto twice = space.project(once);
      CHECK(once == twice);
      CHECK(space.feasible(once, 1e-9));
    }
  }
}

TEST_CASE("feasible points pass through projection unchanged") {
  const auto space = default_space(Family::loglinear, SpaceVariant::loglinear_stable);
  const std::vector<double> t{0.5, 0.3, 0.4};
  CHECK(space.project(t) == t);
}

TEST_CASE("binding |a+b| constraint shrinks onto the margin") {
  auto space = default_space(Family::loglinear, SpaceVariant::loglinear_stable);
  const auto p = space.project(std::vector<double>{0.0, 0.9, 0.9});
  CHECK(std::fabs(p[1] + p[2]) == doctest::Approx(0.9).epsilon(1e-8));
  CHECK(std::fabs(p[1] + p[2]) <= 0.9);
  CHECK(p[1] == doctest::Approx(p[2]).epsilon(1e-12));  // proportional shrink
}

TEST_CASE("threshold projection satisfies every inequality afterwards") {
  auto space = default_space(Family::threshold, SpaceVariant::threshold_wellspecified);
  RngStream rng(707, 0);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> t(5);
    for (auto& v : t) v = -1.5 + 4.0 * rng.next_double();
    const auto p = space.project(t);
    const double w = p[0], a = p[1], b = p[2], c = p[3], d = p[4];
    CHECK(std::min({w, a, b, a + c, b + d}) >= space.alpha_floor - 1e-9);
    CHECK(std::max(a, a + b + c + d) <= space.stability_margin + 1e-9);
    for (int j = 0; j < 5; ++j) {
      CHECK(p[j] >= space.lower[j] - 1e-12);
      CHECK(p[j] <= space.upper[j] + 1e-12);
    }
  }
  space.variant = SpaceVariant::threshold_misspecified;
  const auto p = space.project(std::vector<double>{1.0, 0.8, 0.2, 0.5, 0.0});
  CHECK(std::max(p[1], p[1] + p[3]) <= space.stability_margin + 1e-9);
}

TEST_CASE("empty spaces are rejected") {
  auto space = default_space(Family::threshold, SpaceVariant::threshold_wellspecified);
  space.upper[1] = 0.02;  // below alpha_floor: no feasible a
  CHECK_THROWS_AS(space.validate(), ConfigError);
  auto bad = default_space(Family::loglinear, SpaceVariant::loglinear_stable);
  bad.lower[0] = 3.0;  // lower > upper
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(default_space(Family::garch, SpaceVariant::loglinear_box),
                  ConfigError);
}

TEST_CASE("theta/model round trip") {
  auto space = default_space(Family::threshold, SpaceVariant::threshold_wellspecified);
  space.threshold_L = 0.5;
  space.threshold_U = 1.5;
  const std::vector<double> t{1.0, 0.2, 0.2, 0.2, 0.2};
  const auto model = space.model_from_theta(t);
  CHECK(model.threshold().L == 0.5);
  CHECK(model.threshold().U == 1.5);
  CHECK(space.theta_from_model(model) == t);
}

TEST_CASE("latin hypercube starts are feasible and deterministic") {
  const auto space = default_space(Family::loglinear, SpaceVariant::loglinear_stable);
  RngStream a(808, 1), b(808, 1);
  const auto pa = latin_hypercube(space, 16, a);
  const auto pb = latin_hypercube(space, 16, b);
  CHECK(pa == pb);
  CHECK(pa.size() == 16);
  for (const auto& t : pa) CHECK(space.feasible(t, 1e-9));
}

TEST_CASE("active constraints name the binding inequalities") {
  const auto space = default_space(Family::loglinear, SpaceVariant::loglinear_stable);
  const auto p = space.project(std::vector<double>{0.0, 0.9, 0.9});
  const auto act = space.active_constraints(p);
  bool saw = false;
  for (const auto& name : act) saw = saw || name == "stability:|a+b|";
  CHECK(saw);
}
