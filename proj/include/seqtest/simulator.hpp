#pragma once

#include <cstdint>
#include <vector>

#include "seqtest/solver.hpp"

namespace seqtest {

/// Exact V^horizon(0, mu(S+)) by backward induction over the full outcome
/// tree from (0, 0). No grid, no interpolation. Throws std::invalid_argument
/// for continuous schemes and std::length_error when the tree would exceed
/// 1e7 leaves.
double brute_force_value(const Prior& prior, const NaturalFamily& family, double c, int horizon);

/// Posterior probabilities q(n, y) at every node of the outcome tree with
/// n < horizon, sorted and deduplicated. Pinning these into the pi-grid makes
/// the grid solution exact at the root.
std::vector<double> reachable_pis(const Prior& prior, const NaturalFamily& family, int horizon);

struct ReplicateTrace {
  int replicate;
  double theta;
  int tau;
  int decision;
  double loss;
};

struct SimulationReport {
  int replicates = 0;
  double cost = 0.0;
  double mean_cost = 0.0;
  double std_error = 0.0;
  double mean_stopping_time = 0.0;
  double false_accept_h1 = 0.0;  ///< P(accept H1, Theta <= theta0)
  double false_accept_h0 = 0.0;  ///< P(accept H0, Theta > theta0)
  int capped = 0;                ///< replicates stopped by the horizon cap
  std::uint64_t seed = 0;
  std::vector<ReplicateTrace> trace;  ///< filled only on request
};

struct SimulationOptions {
  int replicates = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  bool keep_trace = false;
};

/// Plays the grid policy: Theta from the prior atoms, observations from the
/// family, stop when policy_decide says so or at the surface horizon.
SimulationReport simulate_policy(const ValueSurface& surface, const Prior& prior,
                                 const NaturalFamily& family, const SimulationOptions& options);

/// A baseline stopping rule. fixed: observe exactly `samples` times.
/// threshold: continue while lower < pi < upper, at most `cap` observations.
struct AlternativeRule {
  enum class Kind { fixed, threshold };
  Kind kind = Kind::fixed;
  int samples = 0;
  double lower = 0.0;
  double upper = 1.0;
  int cap = 0;

  static AlternativeRule fixed(int k) { return {Kind::fixed, k, 0.0, 1.0, k}; }
  static AlternativeRule threshold(double lo, double hi, int cap) {
    return {Kind::threshold, 0, lo, hi, cap};
  }
};

SimulationReport simulate_alternative(const AlternativeRule& rule, const Prior& prior,
                                      const NaturalFamily& family, double c,
                                      const SimulationOptions& options);

/// Pairwise (cascade) sum, deterministic for a given ordering.
double pairwise_sum(const std::vector<double>& xs);

}  // namespace seqtest
