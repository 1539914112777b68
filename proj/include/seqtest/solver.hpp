#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "seqtest/prior.hpp"

namespace seqtest {

enum class GridSpacing { uniform, cosine };

/// How E_{n,pi}[f(Pi_{n+1})] is evaluated for continuous observation laws.
///
/// `exact` integrates the piecewise-linear interpolant of the next layer in
/// closed form: f = v0 + s0*pi + sum_k ds_k (pi - pi_k)^+, so the expectation
/// reduces to stop-loss transforms, each a combination of component tail
/// probabilities. `quadrature` sums over the scheme's nodes instead.
enum class ContinuousExpectation { exact, quadrature };

struct SolveOptions {
  int grid_size = 2001;
  GridSpacing spacing = GridSpacing::uniform;
  /// Extra grid points in (0,1), e.g. every posterior probability reachable
  /// from the root, which makes interpolation exact there.
  std::vector<double> pinned;
  ContinuousExpectation expectation = ContinuousExpectation::exact;
  int threads = 1;
};

/// Truncated value functions V^N(n, .) on a pi-grid, n = 0..horizon.
struct ValueSurface {
  double cost = 0.0;
  int horizon = 0;
  std::vector<double> pi_grid;
  std::vector<double> values;  ///< row-major, (horizon + 1) x pi_grid.size()
  std::vector<double> b1;
  std::vector<double> b2;

  std::size_t grid_size() const { return pi_grid.size(); }
  std::span<const double> layer(int n) const;
  std::span<double> layer(int n);
  double at(int n, std::size_t j) const { return values[n * pi_grid.size() + j]; }
  double interpolate(int n, double pi) const;
};

/// Grid with endpoints 0 and 1, the midpoint 1/2 and any pinned points.
/// Points closer than 1e-13 are merged.
std::vector<double> make_pi_grid(int size, GridSpacing spacing = GridSpacing::uniform,
                                 std::span<const double> pinned = {});

/// Piecewise-linear interpolation; pi is clamped to [grid.front(), grid.back()].
double interpolate(std::span<const double> grid, std::span<const double> values, double pi);

/// One backward step of min{gain, c + E_{n,pi}[V(n+1, Pi_{n+1})]}; endpoints stay 0.
std::vector<double> bellman_step(std::span<const double> next_layer, int n,
                                 std::span<const double> grid, const PosteriorEngine& engine,
                                 double c, const SolveOptions& options = {});
std::vector<double> bellman_step(std::span<const double> next_layer, int n,
                                 std::span<const double> grid, const Prior& prior,
                                 const NaturalFamily& family, double c,
                                 const SolveOptions& options = {});

ValueSurface solve(const Prior& prior, const NaturalFamily& family, double c, int horizon,
                   const SolveOptions& options = {});

/// Per layer: b1 = largest grid pi <= 1/2 in the stopping set, b2 = smallest >= 1/2.
/// A layer stopped everywhere gives b1 = b2 = 1/2.
std::pair<std::vector<double>, std::vector<double>> extract_boundaries(const ValueSurface& surface);

/// Boundary values together with the neighbouring grid points on the
/// continuation side; the true boundary lies within [b1, b1_inner] and [b2_inner, b2].
struct BoundaryBracket {
  double b1;
  double b1_inner;
  double b2_inner;
  double b2;
};
BoundaryBracket boundary_bracket(const ValueSurface& surface, int n);

struct PolicyDecision {
  enum class Action { keep_sampling, stop };
  Action action;
  int accept;  ///< 1 accepts H1; meaningful only when stopping
};

/// Continue iff b1[n] < pi < b2[n]; always stops at the horizon. Accepts H1 iff pi > 1/2.
PolicyDecision policy_decide(const ValueSurface& surface, int n, double pi);

/// ceil(1/(2c)) + ceil(slack/c).
int choose_horizon(double c, double slack);

/// Observation cost and stopping permission per step index k (the step from
/// layer k to k+1 observes X_{k+1}).
struct StepSchedule {
  std::function<double(int)> cost;
  std::function<bool(int)> may_stop;
};

/// Backward induction where only layers with may_stop(k) are tabulated on the
/// grid. Between two such layers the value is propagated through the exact
/// outcome tree, so no interpolation happens at non-stopping layers. The
/// horizon layer is the gain. Intended for finite observation schemes.
ValueSurface solve_scheduled(const Prior& prior, const NaturalFamily& family, int horizon,
                             const StepSchedule& schedule, const SolveOptions& options = {});

}  // namespace seqtest
