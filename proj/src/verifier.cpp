#include "seqtest/verifier.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "seqtest/numeric.hpp"

namespace seqtest {
namespace {

constexpr double kMeanTolerance = 1e-8;

// Shortest text that reads back to x.
std::string num(double x) {
  char buf[32];
  return {buf, std::to_chars(buf, buf + sizeof buf, x).ptr};
}

std::string describe(const Prior& prior, const NaturalFamily& family) {
  std::ostringstream out;
  out << family.name() << " atoms=[";
  const auto atoms = prior.atoms();
  const auto lw = prior.log_weights();
  for (std::size_t i = 0; i < atoms.size(); ++i) out << (i ? "," : "") << num(atoms[i]);
  out << "] weights=[";
  for (std::size_t i = 0; i < lw.size(); ++i) out << (i ? "," : "") << num(std::exp(lw[i]));
  out << "] theta0=" << num(prior.theta0());
  return out.str();
}

void record(CheckReport& report, double violation, int n, double pi, double aux) {
  if (violation > report.violation) {
    report.violation = violation;
    report.n = n;
    report.pi = pi;
    report.aux = aux;
  }
}

void finish(CheckReport& report) {
  report.pass = report.violation <= report.tolerance;
  if (report.pass) report.n = -1;
}

// E[(P - t)^+] for a discrete law.
double discrete_stop_loss(const std::vector<Transition>& law, double t) {
  double acc = 0.0;
  for (const Transition& tr : law) acc += tr.weight * std::max(0.0, tr.next_pi - t);
  return acc;
}

double mean_of(const std::vector<Transition>& law) {
  double acc = 0.0;
  for (const Transition& tr : law) acc += tr.weight * tr.next_pi;
  return acc;
}

}  // namespace

CheckReport check_concavity(const ValueSurface& surface, double tol, double curvature_allowance) {
  CheckReport report;
  report.check = "concavity";
  std::ostringstream inst;
  inst << "surface c=" << num(surface.cost) << " horizon=" << surface.horizon
       << " grid=" << surface.grid_size();
  report.instance = inst.str();
  const auto& grid = surface.pi_grid;
  double widest = 0.0;
  for (std::size_t j = 1; j < grid.size(); ++j) widest = std::max(widest, grid[j] - grid[j - 1]);
  report.tolerance = tol + curvature_allowance * widest * widest;

  for (int n = 0; n <= surface.horizon; ++n) {
    const auto v = surface.layer(n);
    for (std::size_t j = 1; j + 1 < grid.size(); ++j) {
      const double lam = (grid[j] - grid[j - 1]) / (grid[j + 1] - grid[j - 1]);
      const double chord = (1.0 - lam) * v[j - 1] + lam * v[j + 1];
      record(report, chord - v[j], n, grid[j], 0.0);
    }
  }
  finish(report);
  return report;
}

CheckReport check_concentration(const Prior& prior, const NaturalFamily& family, double pi,
                                double a, double b, int n_max, double tol) {
  if (!(a < prior.theta0() && prior.theta0() < b))
    throw std::invalid_argument("concentration check needs a < theta0 < b");
  if (!(pi > 0.0 && pi < 1.0)) throw std::invalid_argument("pi must lie in (0,1)");
  const PosteriorEngine engine(prior, family);
  CheckReport report;
  report.check = "concentration";
  std::ostringstream inst;
  inst << describe(prior, family) << " pi=" << num(pi) << " a=" << num(a) << " b=" << num(b);
  report.instance = inst.str();
  report.tolerance = tol;

  double prev_below = 0.0;
  double prev_above = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    const PosteriorState state = engine.posterior(n, engine.y_of_pi(n, pi));
    const double below = mass_below(state, a);
    const double above = mass_above(state, b);
    if (n > 0) {
      record(report, below - prev_below, n, pi, a);
      record(report, above - prev_above, n, pi, b);
    }
    prev_below = below;
    prev_above = above;
  }
  finish(report);
  return report;
}

std::vector<double> level_spreads(const Prior& prior, const NaturalFamily& family, double pi1,
                                  double pi2, int n_max) {
  if (pi1 > pi2) throw std::invalid_argument("level spread needs pi1 <= pi2");
  const PosteriorEngine engine(prior, family);
  std::vector<double> out;
  for (int n = 0; n <= n_max; ++n)
    out.push_back(pi1 == pi2 ? 0.0 : engine.y_of_pi(n, pi2) - engine.y_of_pi(n, pi1));
  return out;
}

CheckReport check_level_spread(const Prior& prior, const NaturalFamily& family, double pi1,
                               double pi2, int n_max, double tol) {
  CheckReport report;
  report.check = "level_spread";
  std::ostringstream inst;
  inst << describe(prior, family) << " pi1=" << num(pi1) << " pi2=" << num(pi2);
  report.instance = inst.str();
  report.tolerance = tol;
  const auto spreads = level_spreads(prior, family, pi1, pi2, n_max);
  for (int n = 1; n <= n_max; ++n) record(report, spreads[n - 1] - spreads[n], n, pi1, pi2);
  finish(report);
  return report;
}

std::vector<double> default_t_grid() {
  std::vector<double> t;
  for (int k = 1; k <= 99; ++k) t.push_back(k / 100.0);
  return t;
}

CheckReport check_convex_order(const Prior& prior, const NaturalFamily& family, double pi, int m,
                               int n, const std::vector<double>& t_grid, double tol) {
  if (m > n) throw std::invalid_argument("convex order check needs m <= n");
  const PosteriorEngine engine(prior, family);
  CheckReport report;
  report.check = "convex_order";
  std::ostringstream inst;
  inst << describe(prior, family) << " pi=" << num(pi) << " m=" << m << " n=" << n;
  report.instance = inst.str();
  report.tolerance = tol;

  const auto early = engine.transitions(m, pi);
  const auto late = engine.transitions(n, pi);
  const double mean_early = mean_of(early);
  const double mean_late = mean_of(late);
  if (std::abs(mean_early - mean_late) > kMeanTolerance)
    throw std::logic_error("convex order: means differ, observation scheme too coarse");

  // Finite schemes give exact finite sums; continuous ones use closed-form tails.
  const bool finite = engine.scheme().is_finite();
  for (double t : t_grid) {
    const double sl_early = finite ? discrete_stop_loss(early, t) : engine.stop_loss(m, pi, t);
    const double sl_late = finite ? discrete_stop_loss(late, t) : engine.stop_loss(n, pi, t);
    record(report, sl_late - sl_early, n, pi, t);
  }
  finish(report);
  return report;
}

int default_burn(int horizon) {
  return std::max(4, static_cast<int>(std::ceil(0.2 * horizon)));
}

CheckReport check_time_monotonicity(const ValueSurface& surface, double tol, int burn) {
  if (burn < 0) burn = default_burn(surface.horizon);
  CheckReport report;
  report.check = "time_monotonicity";
  std::ostringstream inst;
  inst << "surface c=" << num(surface.cost) << " horizon=" << surface.horizon
       << " grid=" << surface.grid_size() << " burn=" << burn;
  report.instance = inst.str();
  report.tolerance = tol;
  const int last = surface.horizon - burn;
  if (last < 1) report.note = "burn window covers every layer; nothing compared";

  const auto& grid = surface.pi_grid;
  for (int n = 0; n + 1 <= last; ++n) {
    const auto now = surface.layer(n);
    const auto next = surface.layer(n + 1);
    for (std::size_t j = 1; j + 1 < grid.size(); ++j) record(report, now[j] - next[j], n + 1, grid[j], 0.0);
    // Boundaries move by whole cells; any reversal counts at its full size.
    const double b1_drop = surface.b1[n] - surface.b1[n + 1];
    const double b2_rise = surface.b2[n + 1] - surface.b2[n];
    if (b1_drop > 0.0) record(report, b1_drop, n + 1, surface.b1[n + 1], 1.0);
    if (b2_rise > 0.0) record(report, b2_rise, n + 1, surface.b2[n + 1], 2.0);
  }
  finish(report);
  return report;
}

CheckReport check_binomial_reduction(int trials, const Prior& prior, double c, int grid_size,
                                     double tol, int horizon, int threads) {
  if (trials < 1) throw std::invalid_argument("binomial reduction needs N >= 1");
  if (horizon <= 0) horizon = choose_horizon(c, 0.25);
  SolveOptions options;
  options.grid_size = grid_size;
  options.threads = threads;

  const NaturalFamily binomial = NaturalFamily::binomial(trials);
  const ValueSurface lumped = solve(prior, binomial, c, horizon, options);
  StepSchedule schedule;
  schedule.cost = [trials, c](int k) { return k % trials == 0 ? c : 0.0; };
  schedule.may_stop = [trials](int k) { return k % trials == 0; };
  const ValueSurface spread =
      solve_scheduled(prior, NaturalFamily::bernoulli(), horizon * trials, schedule, options);

  CheckReport report;
  report.check = "binomial_reduction";
  std::ostringstream inst;
  inst << describe(prior, binomial) << " c=" << num(c) << " horizon=" << horizon
       << " grid=" << grid_size;
  report.instance = inst.str();
  report.tolerance = tol;
  const auto& grid = lumped.pi_grid;
  for (int n = 0; n <= horizon; ++n)
    for (std::size_t j = 0; j < grid.size(); ++j)
      record(report, std::abs(lumped.at(n, j) - spread.at(n * trials, j)), n, grid[j], n * trials);
  finish(report);
  return report;
}

Interval probe_window(const NaturalFamily& family) {
  switch (family.model()) {
    case Model::gaussian_mean: return {-1.5, 1.5};
    case Model::bernoulli:
    case Model::binomial: return {-2.5, 2.5};
    case Model::exponential_rate:
    case Model::gaussian_variance: return {0.3, 3.0};
    case Model::finite: break;
  }
  return {-1.0, 1.0};
}

double probe_threshold(const NaturalFamily& family) {
  switch (family.model()) {
    case Model::exponential_rate:
    case Model::gaussian_variance: return 1.0;
    default: return 0.0;
  }
}

Prior sample_probe_prior(const NaturalFamily& family, Rng& rng) {
  const Interval window = probe_window(family);
  const double theta0 = probe_threshold(family);
  std::uniform_int_distribution<int> count(2, 10);
  std::uniform_real_distribution<double> place(window.lo, window.hi);
  std::exponential_distribution<double> gamma1(1.0);
  for (;;) {
    const int k = count(rng);
    std::vector<double> atoms(k);
    for (double& a : atoms) a = place(rng);
    std::sort(atoms.begin(), atoms.end());
    bool distinct = std::adjacent_find(atoms.begin(), atoms.end()) == atoms.end();
    bool two_sided = atoms.front() <= theta0 && atoms.back() > theta0;
    std::vector<double> weights(k);
    for (double& w : weights) w = gamma1(rng);
    if (!distinct || !two_sided) continue;
    double total = 0.0;
    for (double w : weights) total += w;
    for (double& w : weights) w /= total;
    return Prior(atoms, weights, theta0);
  }
}

std::vector<ProbeTrial> conjecture_probe(const std::vector<std::string>& models,
                                         const ProbeOptions& options) {
  if (options.trials < 0) throw std::invalid_argument("trials must be non-negative");
  std::vector<ProbeTrial> out(options.trials);
  if (options.trials == 0) return out;
  if (models.empty()) throw std::invalid_argument("probe needs at least one model");

  const int horizon = choose_horizon(options.cost, options.slack);
  auto run_trial = [&](int t) {
    ProbeTrial& trial = out[t];
    trial.trial = t;
    trial.model = models[t % models.size()];
    trial.trial_seed = derive_seed(options.seed, t);
    Rng rng(trial.trial_seed);
    const NaturalFamily family = make_named_family(trial.model);
    const Prior prior = sample_probe_prior(family, rng);
    trial.atoms.assign(prior.atoms().begin(), prior.atoms().end());
    for (double lw : prior.log_weights()) trial.weights.push_back(std::exp(lw));
    trial.theta0 = prior.theta0();
    trial.horizon = horizon;
    trial.grid_size = options.grid_size;

    SolveOptions solve_options;
    solve_options.grid_size = options.grid_size;
    try {
      const ValueSurface surface = solve(prior, family, options.cost, horizon, solve_options);
      trial.report = check_time_monotonicity(surface, options.tol);
    } catch (const std::exception& e) {
      // A numerical breakdown is reported with the same reproduction data.
      trial.report.pass = false;
      trial.report.tolerance = options.tol;
      trial.report.note = e.what();
    }
    trial.report.check = "conjecture_probe";
    trial.report.instance = describe(prior, family) + " " + trial.report.instance;
    trial.report.asserted = false;
    trial.finding = !trial.report.pass;
  };

  const int workers = std::clamp(options.threads, 1, options.trials);
  if (workers == 1) {
    for (int t = 0; t < options.trials; ++t) run_trial(t);
    return out;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int t = w; t < options.trials; t += workers) run_trial(t);
    });
  pool.clear();
  return out;
}

}  // namespace seqtest
