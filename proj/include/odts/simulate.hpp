#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "odts/models.hpp"
#include "odts/rng.hpp"

namespace odts {

struct SeedRecord {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

// Post-burn-in path of the recursion: x holds X_0..X_n, y holds Y_1..Y_n,
// and x[k+1] == link(model, x[k], y[k]) replays exactly.
struct Trajectory {
  std::vector<double> x;
  std::vector<double> y;
  ModelSpec model;
  SeedRecord seeds;
  long long burn_in = 0;
};

Trajectory simulate(const ModelSpec& model, double x0, long long n,
                    RngStream& rng, long long burn_in);

// Two chains driven by the thinning-coupled kernel, plus the per-step
// coincidence coins U_1..U_n and the first failure time (1-based; empty
// when the coins never came up 0).
struct CoupledPath {
  std::vector<double> x;
  std::vector<double> x_prime;
  std::vector<std::uint8_t> u;
  std::optional<long long> t_fail;
};

CoupledPath simulate_coupled(const ModelSpec& model, double x0,
                             double x0_prime, long long n, RngStream& rng);

// Shared-innovation kernel: both chains consume one Poisson draw at the
// minimum rate each step; u is identically 1.
CoupledPath simulate_qsharp(const ModelSpec& model, double x0,
                            double x0_prime, long long n, RngStream& rng);

// Noise-free fixed point of the family (the reachable points used in the
// uniqueness arguments): threshold omega/(1-a-c), log-linear d/(1-a),
// GARCH d/(1-a-b).
double default_initial_state(const ModelSpec& model);

// Coincidence probability of the coupled kernel: exp(-|rate gap|).
double coupling_alpha(const ModelSpec& model, double x, double x_prime);

// Observation-kernel rate/variance for state x (with the divergence guard).
double observation_rate(const ModelSpec& model, double x, long long step);

// header `k,x,y`; x with 17 significant digits, y shortest round-trip; the
// k = 0 row has an empty y field.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace odts
