#include "seqtest/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include "seqtest/numeric.hpp"

namespace seqtest {
namespace {

constexpr double kMaxLeaves = 1e7;

// Direct posterior bookkeeping for the oracle, kept apart from PosteriorEngine
// so the two can check each other.
struct TreeModel {
  std::vector<double> atoms;
  std::vector<double> log_weights;
  std::vector<double> log_partition;
  std::size_t split = 0;
  std::vector<double> outcomes;
  std::vector<double> log_base;

  TreeModel(const Prior& prior, const NaturalFamily& family) {
    const ObservationScheme& scheme = family.scheme();
    if (!scheme.is_finite()) throw std::invalid_argument("oracle requires finite outcomes");
    validate_support(prior, family);
    atoms.assign(prior.atoms().begin(), prior.atoms().end());
    log_weights.assign(prior.log_weights().begin(), prior.log_weights().end());
    for (double u : atoms) log_partition.push_back(family.log_partition(u));
    split = prior.split();
    outcomes = scheme.points;
    log_base = scheme.log_weights;
  }

  // Normalized posterior log-weights at (n, y).
  std::vector<double> posterior(int n, double y) const {
    std::vector<double> lw(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i)
      lw[i] = log_weights[i] + atoms[i] * y - n * log_partition[i];
    const double z = log_sum_exp(lw);
    for (double& v : lw) v -= z;
    return lw;
  }

  double upper_mass(const std::vector<double>& lw) const {
    double acc = 0.0;
    for (std::size_t i = split; i < lw.size(); ++i) acc += std::exp(lw[i]);
    return acc;
  }

  double lower_mass(const std::vector<double>& lw) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < split; ++i) acc += std::exp(lw[i]);
    return acc;
  }

  double predictive(const std::vector<double>& lw, std::size_t k) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i)
      acc += std::exp(lw[i] + log_base[k] + atoms[i] * outcomes[k] - log_partition[i]);
    return acc;
  }
};

void check_tree_size(std::size_t outcomes, int horizon) {
  if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
  if (horizon * std::log10(static_cast<double>(outcomes)) > std::log10(kMaxLeaves) + 1e-12)
    throw std::length_error("outcome tree exceeds 1e7 leaves");
}

// Generic replicate loop. keep_going(n, pi) decides whether to observe again.
// The cap is applied here; a replicate counts as capped when it reaches the cap
// while keep_going still asks for more, unless count_cap is false.
SimulationReport run_replicates(const Prior& prior, const NaturalFamily& family, double c, int cap,
                                const std::function<bool(int, double)>& keep_going, bool count_cap,
                                const SimulationOptions& options) {
  if (options.replicates < 1) throw std::invalid_argument("replicates must be at least 1");
  const PosteriorEngine engine(prior, family);
  const auto atoms = prior.atoms();
  std::vector<double> cumulative;
  double total = 0.0;
  for (double lw : prior.log_weights()) cumulative.push_back(total += std::exp(lw));

  const std::size_t count = options.replicates;
  std::vector<double> loss(count), tau(count), wrong_h1(count), wrong_h0(count);
  std::vector<char> capped(count, 0);
  std::vector<ReplicateTrace> trace(options.keep_trace ? count : 0);

  auto play = [&](std::size_t r) {
    Rng rng(derive_seed(options.seed, r));
    const double draw = std::uniform_real_distribution<double>(0.0, total)(rng);
    const std::size_t idx = std::min<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), draw) - cumulative.begin(),
        atoms.size() - 1);
    const double theta = atoms[idx];
    int n = 0;
    double y = 0.0;
    double pi = engine.pi_of_y(0, 0.0);
    while (n < cap && keep_going(n, pi)) {
      y += family.sample(theta, rng);
      ++n;
      pi = engine.pi_of_y(n, y);
    }
    if (count_cap && n == cap && keep_going(n, pi)) capped[r] = 1;
    const int decision = pi > 0.5 ? 1 : 0;
    const bool upper = idx >= prior.split();
    wrong_h1[r] = (decision == 1 && !upper) ? 1.0 : 0.0;
    wrong_h0[r] = (decision == 0 && upper) ? 1.0 : 0.0;
    tau[r] = n;
    loss[r] = wrong_h1[r] + wrong_h0[r] + c * n;
    if (options.keep_trace) trace[r] = {static_cast<int>(r), theta, n, decision, loss[r]};
  };

  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, count);
  if (workers == 1) {
    for (std::size_t r = 0; r < count; ++r) play(r);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < count; r += workers) play(r);
      });
  }

  SimulationReport report;
  report.replicates = options.replicates;
  report.cost = c;
  report.seed = options.seed;
  const double m = static_cast<double>(count);
  report.mean_cost = pairwise_sum(loss) / m;
  report.mean_stopping_time = pairwise_sum(tau) / m;
  report.false_accept_h1 = pairwise_sum(wrong_h1) / m;
  report.false_accept_h0 = pairwise_sum(wrong_h0) / m;
  std::vector<double> sq(count);
  for (std::size_t r = 0; r < count; ++r) sq[r] = (loss[r] - report.mean_cost) * (loss[r] - report.mean_cost);
  const double var = count > 1 ? pairwise_sum(sq) / (m - 1.0) : 0.0;
  report.std_error = std::sqrt(var / m);
  report.capped = static_cast<int>(std::count(capped.begin(), capped.end(), 1));
  report.trace = std::move(trace);
  return report;
}

}  // namespace

double pairwise_sum(const std::vector<double>& xs) {
  const std::function<double(std::size_t, std::size_t)> sum = [&](std::size_t lo, std::size_t hi) {
    if (hi - lo <= 32) {
      double acc = 0.0;
      for (std::size_t i = lo; i < hi; ++i) acc += xs[i];
      return acc;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return sum(lo, mid) + sum(mid, hi);
  };
  return sum(0, xs.size());
}

double brute_force_value(const Prior& prior, const NaturalFamily& family, double c, int horizon) {
  if (!(c > 0.0)) throw std::invalid_argument("cost must be positive");
  const TreeModel tree(prior, family);
  check_tree_size(tree.outcomes.size(), horizon);

  const std::function<double(int, double)> value = [&](int n, double y) {
    const auto lw = tree.posterior(n, y);
    const double stop = std::min(tree.upper_mass(lw), tree.lower_mass(lw));
    if (n == horizon) return stop;
    double expectation = 0.0;
    for (std::size_t k = 0; k < tree.outcomes.size(); ++k)
      expectation += tree.predictive(lw, k) * value(n + 1, y + tree.outcomes[k]);
    return std::min(stop, c + expectation);
  };
  return value(0, 0.0);
}

std::vector<double> reachable_pis(const Prior& prior, const NaturalFamily& family, int horizon) {
  const TreeModel tree(prior, family);
  check_tree_size(tree.outcomes.size(), horizon);
  std::vector<double> out;
  // Sums of integer-valued outcomes recombine, so walk distinct y per layer.
  std::vector<double> layer{0.0};
  for (int n = 0; n < horizon; ++n) {
    for (double y : layer) {
      const auto lw = tree.posterior(n, y);
      const double pi = logistic(std::log(tree.upper_mass(lw)) - std::log(tree.lower_mass(lw)));
      if (pi > 0.0 && pi < 1.0) out.push_back(pi);
    }
    std::vector<double> next;
    for (double y : layer)
      for (double x : tree.outcomes) next.push_back(y + x);
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    layer = std::move(next);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SimulationReport simulate_policy(const ValueSurface& surface, const Prior& prior,
                                 const NaturalFamily& family, const SimulationOptions& options) {
  if (surface.b1.size() != static_cast<std::size_t>(surface.horizon) + 1)
    throw std::invalid_argument("surface has no boundaries");
  // At the horizon the policy stops by decree; the last free layer tells
  // whether it would have continued.
  const auto keep_going = [&](int n, double pi) {
    const int layer = std::min(n, std::max(0, surface.horizon - 1));
    return policy_decide(surface, layer, pi).action == PolicyDecision::Action::keep_sampling;
  };
  return run_replicates(prior, family, surface.cost, surface.horizon, keep_going, true, options);
}

SimulationReport simulate_alternative(const AlternativeRule& rule, const Prior& prior,
                                      const NaturalFamily& family, double c,
                                      const SimulationOptions& options) {
  if (!(c > 0.0)) throw std::invalid_argument("cost must be positive");
  if (rule.kind == AlternativeRule::Kind::fixed) {
    if (rule.samples < 0) throw std::invalid_argument("fixed rule needs samples >= 0");
    const int k = rule.samples;
    return run_replicates(prior, family, c, k, [](int, double) { return true; }, false, options);
  }
  if (rule.cap < 0) throw std::invalid_argument("threshold rule needs cap >= 0");
  const auto keep_going = [&rule](int, double pi) { return rule.lower < pi && pi < rule.upper; };
  return run_replicates(prior, family, c, rule.cap, keep_going, true, options);
}

}  // namespace seqtest
