#include "seqtest/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "seqtest/numeric.hpp"

namespace seqtest {
namespace {

constexpr double kStopTolerance = 1e-12;
constexpr double kMergeDistance = 1e-13;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Runs body(j) for j in [first, last), split into contiguous chunks.
template <typename Body>
void parallel_for(std::size_t first, std::size_t last, int threads, Body&& body) {
  const std::size_t count = last > first ? last - first : 0;
  if (threads <= 1 || count < 64) {
    for (std::size_t j = first; j < last; ++j) body(j);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, count);
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = first + w * chunk;
    const std::size_t hi = std::min(last, lo + chunk);
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t j = lo; j < hi; ++j) body(j);
    });
  }
}

bool in_stopping_set(double value, double pi) { return value >= gain(pi) - kStopTolerance; }

std::pair<double, double> layer_boundaries(std::span<const double> grid, std::span<const double> layer) {
  double b1 = 0.5;
  double b2 = 0.5;
  bool found_lower = false;
  bool found_upper = false;
  for (std::size_t j = 0; j < grid.size() && grid[j] <= 0.5; ++j)
    if (in_stopping_set(layer[j], grid[j])) {
      b1 = grid[j];
      found_lower = true;
    }
  for (std::size_t j = grid.size(); j-- > 0 && grid[j] >= 0.5;)
    if (in_stopping_set(layer[j], grid[j])) {
      b2 = grid[j];
      found_upper = true;
    }
  if (!found_lower || !found_upper || b1 == 0.5 || b2 == 0.5) return {0.5, 0.5};
  return {b1, b2};
}

// E[f(Pi_{n+1}) | Pi_n = pi_j] for the piecewise-linear f through (grid, next),
// against a continuous observation law with closed-form tails.
class ExactContinuation {
 public:
  ExactContinuation(std::span<const double> next, int n, std::span<const double> grid,
                    const PosteriorEngine& engine)
      : engine_(engine), n_(n) {
    const std::size_t m = grid.size();
    v0_ = next[0];
    s0_ = (next[1] - next[0]) / (grid[1] - grid[0]);
    double prev = s0_;
    for (std::size_t k = 1; k + 1 < m; ++k) {
      const double slope = (next[k + 1] - next[k]) / (grid[k + 1] - grid[k]);
      const double ds = slope - prev;
      prev = slope;
      if (ds == 0.0) continue;
      kinks_.push_back(grid[k]);
      jumps_.push_back(ds);
      thresholds_.push_back(threshold(grid[k]));
    }
  }

  double operator()(double pi) const {
    const auto atoms = engine_.prior().atoms();
    const std::size_t m = atoms.size();
    const std::size_t split = engine_.prior().split();
    const double y = engine_.y_of_pi(n_, pi);
    std::vector<double> w(m);
    engine_.posterior_log_weights(n_, y, w);
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      w[i] = std::exp(w[i]);
      if (i >= split) mean += w[i];
    }
    const NaturalFamily& family = engine_.family();
    double acc = v0_ + s0_ * mean;
    for (std::size_t k = 0; k < kinks_.size(); ++k) {
      const double a = thresholds_[k] - y;
      double above_all = 0.0;
      double above_upper = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double tail = w[i] * family.tail_probability(atoms[i], a);
        above_all += tail;
        if (i >= split) above_upper += tail;
      }
      if (above_all == 0.0) break;  // thresholds increase with k
      acc += jumps_[k] * (above_upper - kinks_[k] * above_all);
    }
    return acc;
  }

 private:
  double threshold(double t) const {
    if (t <= 1e-12) return -kInf;
    if (t >= 1.0 - 1e-12) return kInf;
    return engine_.y_of_pi(n_ + 1, t);
  }

  const PosteriorEngine& engine_;
  int n_;
  double v0_ = 0.0;
  double s0_ = 0.0;
  std::vector<double> kinks_;
  std::vector<double> jumps_;
  std::vector<double> thresholds_;
};

void check_grid(std::span<const double> grid, std::size_t layer_size) {
  if (grid.size() < 3 || grid.size() != layer_size)
    throw std::invalid_argument("layer and grid sizes differ");
  if (grid.front() != 0.0 || grid.back() != 1.0)
    throw std::invalid_argument("pi grid must include 0 and 1");
}

}  // namespace

std::span<const double> ValueSurface::layer(int n) const {
  return std::span<const double>(values).subspan(n * pi_grid.size(), pi_grid.size());
}

std::span<double> ValueSurface::layer(int n) {
  return std::span<double>(values).subspan(n * pi_grid.size(), pi_grid.size());
}

double ValueSurface::interpolate(int n, double pi) const {
  return seqtest::interpolate(pi_grid, layer(n), pi);
}

std::vector<double> make_pi_grid(int size, GridSpacing spacing, std::span<const double> pinned) {
  if (size < 3) throw std::invalid_argument("grid_size must be at least 3");
  std::vector<double> grid;
  grid.reserve(size + pinned.size() + 1);
  for (int k = 0; k < size; ++k) {
    const double s = static_cast<double>(k) / (size - 1);
    grid.push_back(spacing == GridSpacing::uniform ? s
                                                   : 0.5 * (1.0 - std::cos(std::numbers::pi * s)));
  }
  grid.front() = 0.0;
  grid.back() = 1.0;
  grid.push_back(0.5);
  for (double p : pinned) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("pinned grid points must lie in (0,1)");
    grid.push_back(p);
  }
  std::sort(grid.begin(), grid.end());
  std::vector<double> merged;
  merged.reserve(grid.size());
  for (double p : grid) {
    if (!merged.empty() && p - merged.back() < kMergeDistance) {
      // Keep the exact endpoints and midpoint when merging.
      if (p == 1.0 || p == 0.5) merged.back() = p;
      continue;
    }
    merged.push_back(p);
  }
  return merged;
}

double interpolate(std::span<const double> grid, std::span<const double> values, double pi) {
  if (pi <= grid.front()) return values.front();
  if (pi >= grid.back()) return values.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), pi);
  const std::size_t k = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double t = (pi - grid[k]) / (grid[k + 1] - grid[k]);
  return values[k] + t * (values[k + 1] - values[k]);
}

std::vector<double> bellman_step(std::span<const double> next_layer, int n,
                                 std::span<const double> grid, const PosteriorEngine& engine,
                                 double c, const SolveOptions& options) {
  check_grid(grid, next_layer.size());
  const std::size_t m = grid.size();
  std::vector<double> out(m, 0.0);

  const bool exact = engine.scheme().kind == ObservationScheme::Kind::continuous &&
                     options.expectation == ContinuousExpectation::exact;
  if (exact) {
    const ExactContinuation expectation(next_layer, n, grid, engine);
    parallel_for(1, m - 1, options.threads, [&](std::size_t j) {
      out[j] = std::min(gain(grid[j]), c + expectation(grid[j]));
    });
    return out;
  }
  parallel_for(1, m - 1, options.threads, [&](std::size_t j) {
    double expectation = 0.0;
    for (const Transition& t : engine.transitions(n, grid[j]))
      expectation += t.weight * interpolate(grid, next_layer, t.next_pi);
    out[j] = std::min(gain(grid[j]), c + expectation);
  });
  return out;
}

std::vector<double> bellman_step(std::span<const double> next_layer, int n,
                                 std::span<const double> grid, const Prior& prior,
                                 const NaturalFamily& family, double c, const SolveOptions& options) {
  return bellman_step(next_layer, n, grid, PosteriorEngine(prior, family), c, options);
}

ValueSurface solve(const Prior& prior, const NaturalFamily& family, double c, int horizon,
                   const SolveOptions& options) {
  if (!(c > 0.0)) throw std::invalid_argument("cost must be positive");
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  const PosteriorEngine engine(prior, family);

  ValueSurface surface;
  surface.cost = c;
  surface.horizon = horizon;
  surface.pi_grid = make_pi_grid(options.grid_size, options.spacing, options.pinned);
  const std::size_t m = surface.grid_size();
  surface.values.assign((horizon + 1) * m, 0.0);

  auto terminal = surface.layer(horizon);
  for (std::size_t j = 0; j < m; ++j) terminal[j] = gain(surface.pi_grid[j]);
  for (int n = horizon - 1; n >= 0; --n) {
    const auto layer = bellman_step(surface.layer(n + 1), n, surface.pi_grid, engine, c, options);
    std::copy(layer.begin(), layer.end(), surface.layer(n).begin());
  }
  std::tie(surface.b1, surface.b2) = extract_boundaries(surface);
  return surface;
}

std::pair<std::vector<double>, std::vector<double>> extract_boundaries(const ValueSurface& surface) {
  std::vector<double> b1(surface.horizon + 1);
  std::vector<double> b2(surface.horizon + 1);
  for (int n = 0; n <= surface.horizon; ++n)
    std::tie(b1[n], b2[n]) = layer_boundaries(surface.pi_grid, surface.layer(n));
  return {std::move(b1), std::move(b2)};
}

BoundaryBracket boundary_bracket(const ValueSurface& surface, int n) {
  const auto& grid = surface.pi_grid;
  const double b1 = surface.b1.at(n);
  const double b2 = surface.b2.at(n);
  if (b1 == b2) return {b1, b1, b2, b2};
  const auto lo = std::upper_bound(grid.begin(), grid.end(), b1);
  const auto hi = std::lower_bound(grid.begin(), grid.end(), b2);
  return {b1, *lo, *(hi - 1), b2};
}

PolicyDecision policy_decide(const ValueSurface& surface, int n, double pi) {
  if (n < 0 || n > surface.horizon) throw std::out_of_range("time outside the surface horizon");
  const int accept = pi > 0.5 ? 1 : 0;
  if (n == surface.horizon) return {PolicyDecision::Action::stop, accept};
  if (surface.b1[n] < pi && pi < surface.b2[n]) return {PolicyDecision::Action::keep_sampling, 0};
  return {PolicyDecision::Action::stop, accept};
}

int choose_horizon(double c, double slack) {
  if (!(c > 0.0)) throw std::invalid_argument("cost must be positive");
  if (!(slack > 0.0)) throw std::invalid_argument("slack must be positive");
  // Guard ceil against quotients like 3.0000000000000004.
  const auto safe_ceil = [](double x) { return static_cast<int>(std::ceil(x - 1e-9 * std::max(1.0, x))); };
  return safe_ceil(1.0 / (2.0 * c)) + safe_ceil(slack / c);
}

ValueSurface solve_scheduled(const Prior& prior, const NaturalFamily& family, int horizon,
                             const StepSchedule& schedule, const SolveOptions& options) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  const PosteriorEngine engine(prior, family);

  ValueSurface surface;
  surface.cost = schedule.cost(0);
  surface.horizon = horizon;
  surface.pi_grid = make_pi_grid(options.grid_size, options.spacing, options.pinned);
  const auto& grid = surface.pi_grid;
  const std::size_t m = grid.size();
  surface.values.assign((horizon + 1) * m, 0.0);

  auto terminal = surface.layer(horizon);
  for (std::size_t j = 0; j < m; ++j) terminal[j] = gain(grid[j]);

  int anchor = horizon;  // nearest tabulated stopping layer above the current one
  double cost_to_anchor = 0.0;
  // Value at layer k from statistic y, recursing through non-stopping layers.
  std::function<double(int, double)> continuation = [&](int k, double y) {
    double acc = 0.0;
    for (const Transition& t : engine.transitions_from_y(k, y)) {
      const double next = k + 1 == anchor ? surface.interpolate(anchor, t.next_pi)
                                          : continuation(k + 1, y + t.x);
      acc += t.weight * next;
    }
    return schedule.cost(k) + acc;
  };

  for (int k = horizon - 1; k >= 0; --k) {
    const bool stop = schedule.may_stop(k);
    cost_to_anchor += schedule.cost(k);
    auto layer = surface.layer(k);
    parallel_for(1, m - 1, options.threads, [&](std::size_t j) {
      const double cont = continuation(k, engine.y_of_pi(k, grid[j]));
      layer[j] = stop ? std::min(gain(grid[j]), cont) : cont;
    });
    layer[0] = layer[m - 1] = stop ? 0.0 : cost_to_anchor;
    if (stop) {
      anchor = k;
      cost_to_anchor = 0.0;
    }
  }
  std::tie(surface.b1, surface.b2) = extract_boundaries(surface);
  return surface;
}

}  // namespace seqtest
