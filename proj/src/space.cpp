#include "odts/space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace odts {

namespace {

constexpr double kProjectionMargin = 1e-9;

double clip(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

}  // namespace

const char* variant_name(SpaceVariant v) {
  switch (v) {
    case SpaceVariant::threshold_misspecified: return "misspecified";
    case SpaceVariant::threshold_wellspecified: return "wellspecified";
    case SpaceVariant::loglinear_box: return "box";
    case SpaceVariant::loglinear_stable: return "stable";
  }
  return "?";
}

SpaceVariant variant_from_name(std::string_view name, Family family) {
  if (family == Family::threshold) {
    if (name == "misspecified") return SpaceVariant::threshold_misspecified;
    if (name == "wellspecified") return SpaceVariant::threshold_wellspecified;
    throw ConfigError("threshold space variant must be misspecified or wellspecified");
  }
  if (family == Family::loglinear) {
    if (name == "box") return SpaceVariant::loglinear_box;
    if (name == "stable") return SpaceVariant::loglinear_stable;
    throw ConfigError("loglinear space variant must be box or stable");
  }
  throw ConfigError("no parameter space is defined for this family");
}

std::vector<std::string> ParameterSpace::coord_names() const {
  if (family == Family::threshold) return {"omega", "a", "b", "c", "d"};
  return {"d", "a", "b"};
}

void ParameterSpace::validate() const {
  if (family == Family::garch) {
    throw ConfigError("no fitting parameter space is defined for garch");
  }
  const std::size_t want = family == Family::threshold ? 5 : 3;
  if (lower.size() != want || upper.size() != want) {
    throw ConfigError("parameter space box has the wrong dimension");
  }
  for (std::size_t i = 0; i < want; ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) ||
        lower[i] > upper[i]) {
      throw ConfigError("parameter space box bounds must be finite with lower <= upper");
    }
  }
  if (!(stability_margin > 0.0 && stability_margin < 1.0)) {
    throw ConfigError("stability margin must lie in (0, 1)");
  }
  if (family == Family::threshold) {
    if (!(alpha_floor > 0.0)) {
      throw ConfigError("threshold space needs alpha_floor > 0");
    }
    if (!(alpha_floor < stability_margin)) {
      throw ConfigError("threshold space needs alpha_floor < stability margin");
    }
    if (!(0.0 < threshold_L && threshold_L < threshold_U)) {
      throw ConfigError("threshold space needs 0 < L < U");
    }
  }
  // Projection probe: the box center must land on a feasible point.
  std::vector<double> mid(want);
  for (std::size_t i = 0; i < want; ++i) mid[i] = 0.5 * (lower[i] + upper[i]);
  const auto probe = project(mid);
  if (!feasible(probe, 1e-7)) {
    throw ConfigError("parameter space is empty (projection probe failed)");
  }
}

bool ParameterSpace::feasible(std::span<const double> theta, double tol) const {
  if (theta.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (!std::isfinite(theta[i])) return false;
    if (theta[i] < lower[i] - tol || theta[i] > upper[i] + tol) return false;
  }
  if (family == Family::threshold) {
    const double w = theta[0], a = theta[1], b = theta[2], c = theta[3],
                 d = theta[4];
    if (std::min({w, a, b, a + c, b + d}) < alpha_floor - tol) return false;
    const double stab = variant == SpaceVariant::threshold_misspecified
                            ? std::max(a, a + c)
                            : std::max(a, a + b + c + d);
    if (stab > stability_margin + tol) return false;
    return true;
  }
  const double a = theta[1], b = theta[2];
  if (std::fabs(a) > stability_margin + tol) return false;
  if (variant == SpaceVariant::loglinear_stable) {
    if (std::fabs(b) > stability_margin + tol) return false;
    if (std::fabs(a + b) > stability_margin + tol) return false;
  }
  return true;
}

std::vector<double> ParameterSpace::project(std::span<const double> theta) const {
  std::vector<double> t(theta.begin(), theta.end());
  if (t.size() != dim()) {
    throw std::invalid_argument("theta has the wrong dimension for the space");
  }
  for (double& v : t) {
    if (!std::isfinite(v)) throw std::invalid_argument("theta must be finite");
  }
  if (feasible(t)) return t;

  const double target = stability_margin - kProjectionMargin;
  if (family == Family::threshold) {
    for (int round = 0; round < 100; ++round) {
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = clip(t[i], lower[i], upper[i]);
      t[0] = std::max(t[0], alpha_floor);                 // omega
      t[1] = std::max(t[1], alpha_floor);                 // a
      t[2] = std::max(t[2], alpha_floor);                 // b
      if (t[1] + t[3] < alpha_floor) t[3] = alpha_floor - t[1];  // a+c floor
      if (t[2] + t[4] < alpha_floor) t[4] = alpha_floor - t[2];  // b+d floor
      const double stab = variant == SpaceVariant::threshold_misspecified
                              ? std::max(t[1], t[1] + t[3])
                              : std::max(t[1], t[1] + t[2] + t[3] + t[4]);
      if (stab > target && stab > 0.0) {
        const double s = target / stab;
        for (std::size_t i = 1; i < 5; ++i) t[i] *= s;
        continue;  // floors may need restoring
      }
      if (feasible(t, kProjectionMargin)) return t;
    }
    throw ConfigError("threshold projection did not converge; space likely empty");
  }

  // Log-linear families.
  for (int round = 0; round < 100; ++round) {
    t[0] = clip(t[0], lower[0], upper[0]);
    t[1] = clip(clip(t[1], -stability_margin, stability_margin), lower[1], upper[1]);
    if (variant == SpaceVariant::loglinear_stable) {
      t[2] = clip(clip(t[2], -stability_margin, stability_margin), lower[2], upper[2]);
      const double s2 = std::fabs(t[1] + t[2]);
      if (s2 > target && s2 > 0.0) {
        const double s = target / s2;
        t[1] *= s;
        t[2] *= s;
        continue;
      }
    } else {
      t[2] = clip(t[2], lower[2], upper[2]);
    }
    if (feasible(t, kProjectionMargin)) return t;
  }
  throw ConfigError("loglinear projection did not converge; space likely empty");
}

std::vector<double> ParameterSpace::center() const {
  std::vector<double> mid(dim());
  for (std::size_t i = 0; i < dim(); ++i) mid[i] = 0.5 * (lower[i] + upper[i]);
  return project(mid);
}

ModelSpec ParameterSpace::model_from_theta(std::span<const double> theta) const {
  if (theta.size() != dim()) {
    throw std::invalid_argument("theta has the wrong dimension for the space");
  }
  if (family == Family::threshold) {
    ThresholdParams p;
    p.omega = theta[0];
    p.a = theta[1];
    p.b = theta[2];
    p.c = theta[3];
    p.d = theta[4];
    p.L = threshold_L;
    p.U = threshold_U;
    return make_threshold(p);
  }
  LogLinearParams p;
  p.d = theta[0];
  p.a = theta[1];
  p.b = theta[2];
  return make_loglinear(p);
}

std::vector<double> ParameterSpace::theta_from_model(const ModelSpec& model) const {
  if (model.family() != family) {
    throw std::invalid_argument("model family does not match the space");
  }
  if (family == Family::threshold) {
    const auto& p = model.threshold();
    return {p.omega, p.a, p.b, p.c, p.d};
  }
  const auto& p = model.loglinear();
  return {p.d, p.a, p.b};
}

std::vector<std::string> ParameterSpace::active_constraints(
    std::span<const double> theta, double tol) const {
  std::vector<std::string> out;
  const auto names = coord_names();
  for (std::size_t i = 0; i < dim(); ++i) {
    if (theta[i] <= lower[i] + tol) out.push_back("box_lower:" + names[i]);
    if (theta[i] >= upper[i] - tol) out.push_back("box_upper:" + names[i]);
  }
  if (family == Family::threshold) {
    const double w = theta[0], a = theta[1], b = theta[2], c = theta[3],
                 d = theta[4];
    if (w <= alpha_floor + tol) out.push_back("floor:omega");
    if (a <= alpha_floor + tol) out.push_back("floor:a");
    if (b <= alpha_floor + tol) out.push_back("floor:b");
    if (a + c <= alpha_floor + tol) out.push_back("floor:a+c");
    if (b + d <= alpha_floor + tol) out.push_back("floor:b+d");
    const double stab = variant == SpaceVariant::threshold_misspecified
                            ? std::max(a, a + c)
                            : std::max(a, a + b + c + d);
    if (stab >= stability_margin - tol) out.push_back("stability");
  } else {
    if (std::fabs(theta[1]) >= stability_margin - tol) out.push_back("stability:|a|");
    if (variant == SpaceVariant::loglinear_stable) {
      if (std::fabs(theta[2]) >= stability_margin - tol) out.push_back("stability:|b|");
      if (std::fabs(theta[1] + theta[2]) >= stability_margin - tol) {
        out.push_back("stability:|a+b|");
      }
    }
  }
  return out;
}

ParameterSpace default_space(Family family, SpaceVariant variant) {
  ParameterSpace s;
  s.family = family;
  s.variant = variant;
  if (family == Family::threshold) {
    s.lower = {0.05, 0.05, 0.05, -0.85, -0.85};
    s.upper = {3.0, 0.9, 0.9, 0.9, 0.9};
    s.alpha_floor = 0.05;
    s.stability_margin = 0.9;
    s.threshold_L = 1.0;
    s.threshold_U = 3.0;
  } else if (family == Family::loglinear) {
    s.lower = {-2.0, -0.9, -0.9};
    s.upper = {2.0, 0.9, 0.9};
    s.stability_margin = 0.9;
  } else {
    throw ConfigError("no fitting parameter space is defined for garch");
  }
  return s;
}

std::vector<std::vector<double>> latin_hypercube(const ParameterSpace& space,
                                                 int count, RngStream& rng) {
  if (count <= 0) return {};
  const std::size_t d = space.dim();
  std::vector<std::vector<int>> strata(d, std::vector<int>(count));
  for (std::size_t j = 0; j < d; ++j) {
    std::iota(strata[j].begin(), strata[j].end(), 0);
    for (int i = count - 1; i > 0; --i) {
      const int k = static_cast<int>(rng.next_double() * (i + 1));
      std::swap(strata[j][i], strata[j][std::min(k, i)]);
    }
  }
  std::vector<std::vector<double>> points;
  points.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::vector<double> theta(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double u = (strata[j][i] + rng.next_double()) / count;
      theta[j] = space.lower[j] + (space.upper[j] - space.lower[j]) * u;
    }
    points.push_back(space.project(theta));
  }
  return points;
}

}  // namespace odts
