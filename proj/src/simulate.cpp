#include "odts/simulate.hpp"

#include <cmath>
#include <ostream>

#include "odts/stats.hpp"

namespace odts {

namespace {

void validate_for_simulation(const ModelSpec& model) {
  switch (model.family()) {
    case Family::threshold: model.threshold().validate_relaxed(); break;
    case Family::loglinear: model.loglinear().validate(); break;
    case Family::garch: model.garch().validate(); break;
  }
}

void check_initial_state(const ModelSpec& model, double x0) {
  if (!std::isfinite(x0)) throw std::domain_error("initial state must be finite");
  if (model.family() == Family::threshold && x0 < 0.0) {
    throw std::domain_error("threshold initial state must be >= 0");
  }
  if (model.family() == Family::garch && !(x0 > 0.0)) {
    throw std::domain_error("garch initial variance must be > 0");
  }
}

double step_state(const ModelSpec& model, double x, double y) {
  switch (model.family()) {
    case Family::threshold: {
      const auto& p = model.threshold();
      return p.omega + p.slope(y) * x + p.obs_term(y);
    }
    case Family::loglinear: {
      const auto& p = model.loglinear();
      return p.d + p.a * x + p.b * std::log1p(y);
    }
    case Family::garch: {
      const auto& p = model.garch();
      return p.d + p.a * x + p.b * y * y;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

double observation_rate(const ModelSpec& model, double x, long long step) {
  double rate = 0.0;
  switch (model.family()) {
    case Family::threshold: rate = x; break;
    case Family::loglinear:
      if (x > std::log(kMaxPoissonRate)) rate = kMaxPoissonRate * 2.0;
      else rate = std::exp(x);
      break;
    case Family::garch: rate = x; break;
  }
  if (!(rate >= 0.0) || rate > kMaxPoissonRate || !std::isfinite(rate)) {
    throw DivergenceError("state left the observation-kernel domain at step " +
                              std::to_string(step),
                          step);
  }
  return rate;
}

Trajectory simulate(const ModelSpec& model, double x0, long long n,
                    RngStream& rng, long long burn_in) {
  validate_for_simulation(model);
  check_initial_state(model, x0);
  if (n < 1) throw std::invalid_argument("trajectory length must be >= 1");
  if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");

  Trajectory traj;
  traj.model = model;
  traj.seeds = {rng.seed(), rng.stream_id()};
  traj.burn_in = burn_in;
  traj.x.reserve(n + 1);
  traj.y.reserve(n);

  double x = x0;
  for (long long step = 1; step <= burn_in + n; ++step) {
    const double rate = observation_rate(model, x, step);
    double y;
    if (model.family() == Family::garch) {
      y = rng.gaussian(rate);
    } else {
      y = static_cast<double>(rng.poisson(rate));
    }
    if (step == burn_in + 1) traj.x.push_back(x);
    x = step_state(model, x, y);
    if (step > burn_in) {
      traj.y.push_back(y);
      traj.x.push_back(x);
    }
  }
  return traj;
}

namespace {

CoupledPath simulate_pair(const ModelSpec& model, double x0, double x0_prime,
                          long long n, RngStream& rng, bool shared_innovation) {
  if (model.family() == Family::garch) {
    throw std::domain_error(
        "coupled simulation is specific to the Poisson-thinning families");
  }
  validate_for_simulation(model);
  check_initial_state(model, x0);
  check_initial_state(model, x0_prime);
  if (n < 1) throw std::invalid_argument("path length must be >= 1");

  CoupledPath path;
  path.x.reserve(n + 1);
  path.x_prime.reserve(n + 1);
  path.u.reserve(n);
  path.x.push_back(x0);
  path.x_prime.push_back(x0_prime);

  double x = x0, xp = x0_prime;
  for (long long step = 1; step <= n; ++step) {
    const double r1 = observation_rate(model, x, step);
    const double r2 = observation_rate(model, xp, step);
    double y, yp;
    int u = 1;
    if (shared_innovation) {
      y = yp = static_cast<double>(rng.poisson(std::min(r1, r2)));
    } else {
      const auto [a, b, coin] = rng.coupled_poisson(r1, r2);
      y = static_cast<double>(a);
      yp = static_cast<double>(b);
      u = coin;
    }
    x = step_state(model, x, y);
    xp = step_state(model, xp, yp);
    path.x.push_back(x);
    path.x_prime.push_back(xp);
    path.u.push_back(static_cast<std::uint8_t>(u));
    if (u == 0 && !path.t_fail) path.t_fail = step;
  }
  return path;
}

}  // namespace

CoupledPath simulate_coupled(const ModelSpec& model, double x0,
                             double x0_prime, long long n, RngStream& rng) {
  return simulate_pair(model, x0, x0_prime, n, rng, false);
}

CoupledPath simulate_qsharp(const ModelSpec& model, double x0,
                            double x0_prime, long long n, RngStream& rng) {
  return simulate_pair(model, x0, x0_prime, n, rng, true);
}

double default_initial_state(const ModelSpec& model) {
  switch (model.family()) {
    case Family::threshold: {
      const auto& p = model.threshold();
      const double denom = 1.0 - p.a - p.c;
      return denom > 1e-9 ? p.omega / denom : p.omega;
    }
    case Family::loglinear: {
      const auto& p = model.loglinear();
      return std::fabs(p.a) < 1.0 - 1e-9 ? p.d / (1.0 - p.a) : p.d;
    }
    case Family::garch: {
      const auto& p = model.garch();
      const double denom = 1.0 - p.a - p.b;
      return denom > 1e-9 ? p.d / denom : p.d;
    }
  }
  throw std::logic_error("unreachable");
}

double coupling_alpha(const ModelSpec& model, double x, double x_prime) {
  switch (model.family()) {
    case Family::threshold:
      return std::exp(-std::fabs(x - x_prime));
    case Family::loglinear:
      return std::exp(-(std::fabs(std::exp(x) - std::exp(x_prime))));
    case Family::garch:
      throw std::domain_error("coupling alpha is Poisson-thinning specific");
  }
  throw std::logic_error("unreachable");
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "k,x,y\n";
  os << "0," << fmt_g17(traj.x[0]) << ",\n";
  for (std::size_t k = 0; k < traj.y.size(); ++k) {
    os << (k + 1) << ',' << fmt_g17(traj.x[k + 1]) << ','
       << fmt_double(traj.y[k]) << '\n';
  }
}

}  // namespace odts
