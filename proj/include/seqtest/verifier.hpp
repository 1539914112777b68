#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqtest/solver.hpp"

namespace seqtest {

/// Outcome of one structural check. pass == (violation <= tolerance).
struct CheckReport {
  std::string check;
  std::string instance;
  double violation = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  bool asserted = true;  ///< false for probe findings, which never fail a run
  // Location of the worst violation; n < 0 when nothing exceeded the tolerance.
  int n = -1;
  double pi = 0.0;
  double aux = 0.0;
  std::string note;
};

/// Worst positive part of chord - V over consecutive grid triples, all layers.
/// The effective tolerance is tol + curvature_allowance * (max cell width)^2.
CheckReport check_concavity(const ValueSurface& surface, double tol = 1e-8,
                            double curvature_allowance = 0.0);

/// P_{n,pi}(Theta <= a) and P_{n,pi}(Theta > b) along the pi-level curve must be
/// non-increasing for n = 0..n_max. Requires a < theta0 < b.
CheckReport check_concentration(const Prior& prior, const NaturalFamily& family, double pi,
                                double a, double b, int n_max, double tol = 1e-8);

/// y(n, pi2) - y(n, pi1) for n = 0..n_max.
std::vector<double> level_spreads(const Prior& prior, const NaturalFamily& family, double pi1,
                                  double pi2, int n_max);

/// The spread must be non-decreasing in n. pi1 == pi2 is allowed (spread 0).
CheckReport check_level_spread(const Prior& prior, const NaturalFamily& family, double pi1,
                               double pi2, int n_max, double tol = 1e-8);

/// 99 points k/100.
std::vector<double> default_t_grid();

/// Pi_{m+1} | Pi_m = pi must dominate Pi_{n+1} | Pi_n = pi in convex order,
/// tested by stop-loss transforms on t_grid after checking equal means.
/// Throws std::logic_error if the two means differ by more than 1e-8.
CheckReport check_convex_order(const Prior& prior, const NaturalFamily& family, double pi, int m,
                               int n, const std::vector<double>& t_grid = default_t_grid(),
                               double tol = 1e-8);

/// max(4, ceil(0.2 * horizon)).
int default_burn(int horizon);

/// V[n+1] >= V[n] - tol and monotone boundaries for layers n+1 <= horizon - burn.
/// burn < 0 selects default_burn.
CheckReport check_time_monotonicity(const ValueSurface& surface, double tol = 1e-6, int burn = -1);

/// Binomial(N) with cost c against Bernoulli with the cost charged on every
/// N-th observation and stopping only at multiples of N. horizon <= 0 picks
/// choose_horizon(c, 0.25) binomial steps.
CheckReport check_binomial_reduction(int trials, const Prior& prior, double c, int grid_size,
                                     double tol = 1e-6, int horizon = 0, int threads = 1);

struct ProbeOptions {
  double cost = 0.05;
  int trials = 200;
  std::uint64_t seed = 1;
  int grid_size = 401;
  double slack = 0.25;
  double tol = 1e-6;
  int threads = 1;
};

/// One probe trial with everything needed to rerun it.
struct ProbeTrial {
  int trial = 0;
  std::string model;
  std::uint64_t trial_seed = 0;
  std::vector<double> atoms;
  std::vector<double> weights;
  double theta0 = 0.0;
  int horizon = 0;
  int grid_size = 0;
  CheckReport report;
  bool finding = false;
};

/// Parameter window, in natural coordinates, from which probe atoms are drawn.
Interval probe_window(const NaturalFamily& family);
/// Threshold used by the probe for a family (midpoint-like, inside the window).
double probe_threshold(const NaturalFamily& family);

/// Draws a random two-sided prior: 2-10 atoms uniform in probe_window,
/// Dirichlet(1) weights. Deterministic in the rng.
Prior sample_probe_prior(const NaturalFamily& family, Rng& rng);

/// Time-monotonicity on random priors, model chosen round-robin per trial.
/// Violations become findings (asserted = false); nothing here fails a run.
std::vector<ProbeTrial> conjecture_probe(const std::vector<std::string>& models,
                                         const ProbeOptions& options);

}  // namespace seqtest
