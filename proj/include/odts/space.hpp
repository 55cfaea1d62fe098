#pragma once

#include <span>
#include <string>
#include <vector>

#include "odts/models.hpp"
#include "odts/rng.hpp"

namespace odts {

// Which inequality system cuts the box down to the compact Theta.
enum class SpaceVariant {
  threshold_misspecified,   // min(w,a,b,a+c,b+d) >= floor, a v (a+c) <= margin
  threshold_wellspecified,  // min(...) >= floor, (a+b+c+d) v a <= margin
  loglinear_box,            // |d| <= box, |a| <= margin, |b| <= box
  loglinear_stable,         // |d| <= box, |a+b| v |a| v |b| <= margin
};

const char* variant_name(SpaceVariant v);
SpaceVariant variant_from_name(std::string_view name, Family family);

// Compact parameter set Theta: a box plus the family's stability and floor
// inequalities. Coordinate order: threshold (omega, a, b, c, d),
// log-linear (d, a, b). For threshold fits the interval (L, U) is structural
// (not estimated) and rides along here.
struct ParameterSpace {
  Family family = Family::loglinear;
  SpaceVariant variant = SpaceVariant::loglinear_stable;
  std::vector<double> lower;
  std::vector<double> upper;
  double alpha_floor = 0.0;       // threshold families
  double stability_margin = 0.9;  // strict < 1
  double threshold_L = 1.0;
  double threshold_U = 3.0;

  std::size_t dim() const { return lower.size(); }
  std::vector<std::string> coord_names() const;

  // Throws ConfigError when the description cannot yield a nonempty Theta.
  void validate() const;

  bool feasible(std::span<const double> theta, double tol = 0.0) const;

  // Box clipping, floor restoration, then proportional shrinkage of the
  // (a,b,c,d)-type coordinates until the active stability inequality holds
  // with margin 1e-9. Idempotent on feasible points.
  std::vector<double> project(std::span<const double> theta) const;

  std::vector<double> center() const;

  ModelSpec model_from_theta(std::span<const double> theta) const;
  std::vector<double> theta_from_model(const ModelSpec& model) const;

  // Constraints binding at theta within tol (names for diagnostics).
  std::vector<std::string> active_constraints(std::span<const double> theta,
                                              double tol = 1e-7) const;
};

ParameterSpace default_space(Family family, SpaceVariant variant);

// count Latin-hypercube points over the box, each projected into Theta.
std::vector<std::vector<double>> latin_hypercube(const ParameterSpace& space,
                                                 int count, RngStream& rng);

}  // namespace odts
