#include "seqtest/prior.hpp"

#include <cmath>
#include <stdexcept>

#include "seqtest/numeric.hpp"

namespace seqtest {
namespace {

constexpr double kLevelEpsilon = 1e-12;
constexpr int kBisectionSteps = 80;
constexpr int kMaxDoublings = 1100;

// log sum over [first, last) of terms produced by `term(i)`.
template <typename Term>
double lse_range(std::size_t first, std::size_t last, Term&& term) {
  double hi = kNegInf;
  for (std::size_t i = first; i < last; ++i) hi = std::max(hi, term(i));
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (std::size_t i = first; i < last; ++i) acc += std::exp(term(i) - hi);
  return hi + std::log(acc);
}

}  // namespace

Prior::Prior(std::vector<double> atoms, std::vector<double> weights, double theta0)
    : atoms_(std::move(atoms)), theta0_(theta0) {
  if (atoms_.empty()) throw std::invalid_argument("prior needs at least one atom");
  if (atoms_.size() != weights.size())
    throw std::invalid_argument("prior atoms and weights differ in length");
  if (!std::isfinite(theta0_)) throw std::invalid_argument("theta0 must be finite");
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (!std::isfinite(atoms_[i])) throw std::invalid_argument("prior atoms must be finite");
    if (i > 0 && !(atoms_[i] > atoms_[i - 1]))
      throw std::invalid_argument("prior atoms must be strictly increasing");
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
      throw std::invalid_argument("prior weights must be strictly positive");
  }
  split_ = 0;
  while (split_ < atoms_.size() && atoms_[split_] <= theta0_) ++split_;
  if (split_ == 0 || split_ == atoms_.size()) throw std::invalid_argument("degenerate prior");

  log_weights_.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) log_weights_[i] = std::log(weights[i]);
  const double z = log_sum_exp(log_weights_);
  for (double& lw : log_weights_) lw -= z;
}

double Prior::upper_mass() const {
  double acc = 0.0;
  for (std::size_t i = split_; i < atoms_.size(); ++i) acc += std::exp(log_weights_[i]);
  return acc;
}

Prior default_prior(const NaturalFamily& family) {
  const std::vector<double> equal{1.0, 1.0, 1.0};
  switch (family.model()) {
    case Model::gaussian_mean: return Prior({-0.5, 0.1, 0.6}, equal, 0.0);
    case Model::bernoulli:
    case Model::binomial: return Prior({logit(0.3), logit(0.45), logit(0.7)}, equal, 0.0);
    case Model::exponential_rate: return Prior({0.5, 1.0, 2.0}, equal, 0.8);
    case Model::gaussian_variance: {
      std::vector<double> atoms;
      for (double sigma : {1.5, 1.0, 0.7}) atoms.push_back(family.to_natural(sigma));
      return Prior(atoms, equal, family.to_natural(1.2));
    }
    case Model::finite: break;
  }
  throw std::invalid_argument("no default prior for a custom family; supply one");
}

void validate_support(const Prior& prior, const NaturalFamily& family) {
  const Interval dom = family.natural_domain();
  for (double u : prior.atoms())
    if (!dom.contains(u)) throw std::domain_error("prior atom outside natural domain");
}

double mass_below(const PosteriorState& state, double a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < state.atoms.size() && state.atoms[i] <= a; ++i)
    acc += std::exp(state.log_weights[i]);
  return acc;
}

double mass_above(const PosteriorState& state, double a) {
  double acc = 0.0;
  for (std::size_t i = state.atoms.size(); i-- > 0 && state.atoms[i] > a;)
    acc += std::exp(state.log_weights[i]);
  return acc;
}

PosteriorEngine::PosteriorEngine(Prior prior, NaturalFamily family)
    : prior_(std::move(prior)), family_(std::move(family)) {
  validate_support(prior_, family_);
  scheme_ = family_.scheme_for(prior_.atoms().front(), prior_.atoms().back());
  log_partition_.reserve(prior_.size());
  for (double u : prior_.atoms()) log_partition_.push_back(family_.log_partition(u));
}

double PosteriorEngine::log_odds(int n, double y) const {
  const auto atoms = prior_.atoms();
  const auto lw = prior_.log_weights();
  const auto term = [&](std::size_t i) { return lw[i] + atoms[i] * y - n * log_partition_[i]; };
  return lse_range(prior_.split(), atoms.size(), term) - lse_range(0, prior_.split(), term);
}

double PosteriorEngine::pi_of_y(int n, double y) const { return logistic(log_odds(n, y)); }

double PosteriorEngine::y_of_pi(int n, double pi) const {
  if (!(pi > kLevelEpsilon && pi < 1.0 - kLevelEpsilon))
    throw std::out_of_range("level curve out of numerical range");
  const double target = logit(pi);
  const auto excess = [&](double y) { return log_odds(n, y) - target; };

  const double at_zero = excess(0.0);
  if (at_zero == 0.0) return 0.0;
  // Bracket [lo, hi] with excess(lo) < 0 <= excess(hi).
  double lo = 0.0;
  double hi = 0.0;
  double step = 1.0;
  int doublings = 0;
  if (at_zero < 0.0) {
    hi = step;
    while (excess(hi) < 0.0) {
      lo = hi;
      step *= 2.0;
      hi = step;
      if (++doublings > kMaxDoublings || !std::isfinite(hi))
        throw std::out_of_range("level curve out of numerical range");
    }
  } else {
    lo = -step;
    while (excess(lo) >= 0.0) {
      hi = lo;
      step *= 2.0;
      lo = -step;
      if (++doublings > kMaxDoublings || !std::isfinite(lo))
        throw std::out_of_range("level curve out of numerical range");
    }
  }
  for (int i = 0; i < kBisectionSteps; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (excess(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void PosteriorEngine::posterior_log_weights(int n, double y, std::span<double> out) const {
  const auto atoms = prior_.atoms();
  const auto lw = prior_.log_weights();
  for (std::size_t i = 0; i < atoms.size(); ++i) out[i] = lw[i] + atoms[i] * y - n * log_partition_[i];
  const double z = log_sum_exp(out);
  for (double& v : out) v -= z;
}

PosteriorState PosteriorEngine::posterior(int n, double y) const {
  if (n < 0) throw std::invalid_argument("observation count must be non-negative");
  PosteriorState state;
  state.n = n;
  state.y = y;
  state.atoms.assign(prior_.atoms().begin(), prior_.atoms().end());
  state.log_weights.resize(prior_.size());
  posterior_log_weights(n, y, state.log_weights);
  return state;
}

std::vector<Transition> PosteriorEngine::transitions(int n, double pi) const {
  return transitions_from_y(n, y_of_pi(n, pi));
}

std::vector<Transition> PosteriorEngine::transitions_from_y(int n, double y) const {
  const auto atoms = prior_.atoms();
  const std::size_t m = atoms.size();
  const std::size_t split = prior_.split();
  std::vector<double> lw(m);
  posterior_log_weights(n, y, lw);

  std::vector<Transition> out;
  out.reserve(scheme_.size());
  std::vector<double> joint(m);
  for (std::size_t k = 0; k < scheme_.size(); ++k) {
    const double x = scheme_.points[k];
    for (std::size_t i = 0; i < m; ++i) joint[i] = lw[i] + atoms[i] * x - log_partition_[i];
    const auto view = std::span<const double>(joint);
    const double upper = log_sum_exp(view.subspan(split));
    const double lower = log_sum_exp(view.first(split));
    const double log_pred = log_add_exp(upper, lower) + scheme_.log_weights[k];
    out.push_back({x, logistic(upper - lower), std::exp(log_pred)});
  }
  return out;
}

double PosteriorEngine::stop_loss(int n, double pi, double t) const {
  const double y = y_of_pi(n, pi);
  const auto atoms = prior_.atoms();
  std::vector<double> lw(atoms.size());
  posterior_log_weights(n, y, lw);
  double upper = 0.0;
  for (std::size_t i = prior_.split(); i < atoms.size(); ++i) upper += std::exp(lw[i]);
  if (t <= 0.0) return upper - t;
  if (t >= 1.0) return 0.0;
  // Pi_{n+1} > t exactly when the next observation exceeds y(n+1, t) - y.
  const double a = y_of_pi(n + 1, t) - y;
  double above_upper = 0.0;
  double above_all = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double tail = std::exp(lw[i]) * family_.tail_probability(atoms[i], a);
    above_all += tail;
    if (i >= prior_.split()) above_upper += tail;
  }
  return std::max(0.0, above_upper - t * above_all);
}

PosteriorState posterior(const Prior& prior, const NaturalFamily& family, int n, double y) {
  return PosteriorEngine(prior, family).posterior(n, y);
}

double pi_of_y(const Prior& prior, const NaturalFamily& family, int n, double y) {
  if (n < 0) throw std::invalid_argument("observation count must be non-negative");
  return PosteriorEngine(prior, family).pi_of_y(n, y);
}

double y_of_pi(const Prior& prior, const NaturalFamily& family, int n, double pi) {
  if (n < 0) throw std::invalid_argument("observation count must be non-negative");
  return PosteriorEngine(prior, family).y_of_pi(n, pi);
}

std::vector<Transition> transition_distribution(const Prior& prior, const NaturalFamily& family,
                                                int n, double pi) {
  if (!(pi > 0.0 && pi < 1.0)) throw std::invalid_argument("pi must lie in (0,1)");
  return PosteriorEngine(prior, family).transitions(n, pi);
}

double stop_loss(const Prior& prior, const NaturalFamily& family, int n, double pi, double t) {
  return PosteriorEngine(prior, family).stop_loss(n, pi, t);
}

}  // namespace seqtest
