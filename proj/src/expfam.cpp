#include "seqtest/expfam.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "seqtest/numeric.hpp"
#include "seqtest/quadrature.hpp"

namespace seqtest {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Quadrature layout for continuous models. A component's mass beyond
// kTailNats e-folds (or standard deviations, for the Gaussian) is dropped.
constexpr int kNodesPerPanel = 16;
constexpr double kTailNats = 45.0;
constexpr double kGaussianHalfWidth = 9.0;
constexpr double kGaussianPanelWidth = 1.5;

double log_binomial_coefficient(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

ObservationScheme finite_scheme(std::vector<double> outcomes, std::vector<double> base_weights) {
  if (outcomes.empty() || outcomes.size() != base_weights.size())
    throw std::invalid_argument("finite scheme needs matching, non-empty outcome and weight lists");
  std::vector<std::size_t> order(outcomes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return outcomes[a] < outcomes[b]; });
  ObservationScheme scheme;
  scheme.kind = ObservationScheme::Kind::finite;
  for (std::size_t i : order) {
    if (!std::isfinite(outcomes[i])) throw std::invalid_argument("outcomes must be finite");
    if (!(base_weights[i] > 0.0) || !std::isfinite(base_weights[i]))
      throw std::invalid_argument("base weights must be strictly positive");
    if (!scheme.points.empty() && scheme.points.back() == outcomes[i])
      throw std::invalid_argument("finite outcomes must be distinct");
    scheme.points.push_back(outcomes[i]);
    scheme.log_weights.push_back(std::log(base_weights[i]));
  }
  return scheme;
}

ObservationScheme from_rule(const QuadratureRule& rule, auto&& to_point, auto&& log_mass) {
  ObservationScheme scheme;
  scheme.kind = ObservationScheme::Kind::continuous;
  const std::size_t n = rule.nodes.size();
  scheme.points.resize(n);
  scheme.log_weights.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    scheme.points[k] = to_point(rule.nodes[k]);
    scheme.log_weights[k] = std::log(rule.weights[k]) + log_mass(rule.nodes[k]);
  }
  if (n > 1 && scheme.points.front() > scheme.points.back()) {
    std::reverse(scheme.points.begin(), scheme.points.end());
    std::reverse(scheme.log_weights.begin(), scheme.log_weights.end());
  }
  return scheme;
}

// X ~ N(u, 1): nu(dx) = phi(x) dx, panels of bounded width across every component.
ObservationScheme gaussian_mean_scheme(double atom_lo, double atom_hi) {
  const auto breaks = uniform_breaks(atom_lo - kGaussianHalfWidth, atom_hi + kGaussianHalfWidth,
                                     kGaussianPanelWidth);
  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
  return from_rule(composite_gauss_legendre(breaks, kNodesPerPanel), [](double x) { return x; },
                   [&](double x) { return -0.5 * x * x - log_norm; });
}

// X' = -X with X ~ Exp(u): integrate in s = -x with panels growing away from 0.
ObservationScheme exponential_rate_scheme(double atom_lo, double atom_hi) {
  const double extent = kTailNats / atom_lo;
  const auto breaks = geometric_breaks(0.5 / atom_hi, 1.5, extent);
  return from_rule(composite_gauss_legendre(breaks, kNodesPerPanel), [](double s) { return -s; },
                   [](double) { return 0.0; });
}

// X' = -X^2/2 with X ~ N(0, 1/u): in t = sqrt(-x) the density is a half-Gaussian
// and h(x) dx = 2/sqrt(pi) dt, which removes the x^-1/2 singularity at 0.
ObservationScheme gaussian_variance_scheme(double atom_lo, double atom_hi) {
  const double extent = std::sqrt(kTailNats / atom_lo);
  const auto breaks = geometric_breaks(0.5 / std::sqrt(atom_hi), 1.25, extent);
  const double log_jacobian = std::log(2.0 / std::sqrt(std::numbers::pi));
  return from_rule(composite_gauss_legendre(breaks, kNodesPerPanel), [](double t) { return -t * t; },
                   [&](double) { return log_jacobian; });
}

}  // namespace

NaturalFamily NaturalFamily::finite(std::string name, std::vector<double> outcomes,
                                    std::vector<double> base_weights) {
  NaturalFamily f;
  f.name_ = std::move(name);
  f.model_ = Model::finite;
  f.domain_ = {-kInf, kInf};
  f.scheme_ = finite_scheme(std::move(outcomes), std::move(base_weights));
  return f;
}

NaturalFamily NaturalFamily::gaussian_mean() {
  NaturalFamily f;
  f.name_ = "gaussian-mean";
  f.model_ = Model::gaussian_mean;
  f.domain_ = {-kInf, kInf};
  f.scheme_ = gaussian_mean_scheme(-3.0, 3.0);
  return f;
}

NaturalFamily NaturalFamily::bernoulli() {
  NaturalFamily f = finite("bernoulli", {0.0, 1.0}, {1.0, 1.0});
  f.model_ = Model::bernoulli;
  return f;
}

NaturalFamily NaturalFamily::binomial(int trials) {
  if (trials < 1) throw std::invalid_argument("binomial N must be at least 1");
  std::vector<double> outcomes(trials + 1);
  std::vector<double> weights(trials + 1);
  for (int x = 0; x <= trials; ++x) {
    outcomes[x] = x;
    weights[x] = std::exp(log_binomial_coefficient(trials, x));
  }
  NaturalFamily f = finite("binomial(" + std::to_string(trials) + ")", outcomes, weights);
  f.model_ = Model::binomial;
  f.trials_ = trials;
  return f;
}

NaturalFamily NaturalFamily::exponential_rate() {
  NaturalFamily f;
  f.name_ = "exponential-rate";
  f.model_ = Model::exponential_rate;
  f.domain_ = {0.0, kInf};
  f.scheme_ = exponential_rate_scheme(0.2, 5.0);
  return f;
}

NaturalFamily NaturalFamily::gaussian_variance() {
  NaturalFamily f;
  f.name_ = "gaussian-variance";
  f.model_ = Model::gaussian_variance;
  f.domain_ = {0.0, kInf};
  f.scheme_ = gaussian_variance_scheme(0.2, 5.0);
  return f;
}

ObservationScheme NaturalFamily::scheme_for(double atom_lo, double atom_hi) const {
  check_domain(atom_lo);
  check_domain(atom_hi);
  switch (model_) {
    case Model::gaussian_mean: return gaussian_mean_scheme(atom_lo, atom_hi);
    case Model::exponential_rate: return exponential_rate_scheme(atom_lo, atom_hi);
    case Model::gaussian_variance: return gaussian_variance_scheme(atom_lo, atom_hi);
    default: return scheme_;
  }
}

NaturalFamily NaturalFamily::with_window(double atom_lo, double atom_hi) const {
  NaturalFamily copy = *this;
  copy.scheme_ = scheme_for(atom_lo, atom_hi);
  return copy;
}

void NaturalFamily::check_domain(double u) const {
  if (!domain_.contains(u)) throw std::domain_error("parameter outside natural domain");
}

double NaturalFamily::log_partition(double u) const {
  check_domain(u);
  switch (model_) {
    case Model::gaussian_mean: return 0.5 * u * u;
    case Model::exponential_rate: return -std::log(u);
    case Model::gaussian_variance: return -0.5 * std::log(u);
    default: break;
  }
  // Finite scheme: log sum_x h(x) e^{ux}.
  double hi = kNegInf;
  for (std::size_t k = 0; k < scheme_.size(); ++k)
    hi = std::max(hi, scheme_.log_weights[k] + u * scheme_.points[k]);
  double acc = 0.0;
  for (std::size_t k = 0; k < scheme_.size(); ++k)
    acc += std::exp(scheme_.log_weights[k] + u * scheme_.points[k] - hi);
  return hi + std::log(acc);
}

double NaturalFamily::log_base_density(double x) const {
  switch (model_) {
    case Model::gaussian_mean: return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
    case Model::exponential_rate: return x < 0.0 ? 0.0 : kNegInf;
    case Model::gaussian_variance:
      return x < 0.0 ? -0.5 * std::log(-std::numbers::pi * x) : kNegInf;
    default: break;
  }
  const auto it = std::lower_bound(scheme_.points.begin(), scheme_.points.end(), x);
  if (it == scheme_.points.end() || *it != x) return kNegInf;
  return scheme_.log_weights[it - scheme_.points.begin()];
}

double NaturalFamily::tail_probability(double u, double a) const {
  switch (model_) {
    case Model::gaussian_mean:
      check_domain(u);
      return 0.5 * std::erfc((a - u) / std::numbers::sqrt2);
    case Model::exponential_rate:
      check_domain(u);
      return a >= 0.0 ? 0.0 : -std::expm1(u * a);
    case Model::gaussian_variance:
      check_domain(u);
      return a >= 0.0 ? 0.0 : std::erf(std::sqrt(-a * u));
    default: break;
  }
  const double b = log_partition(u);
  double acc = 0.0;
  for (std::size_t k = scheme_.size(); k-- > 0 && scheme_.points[k] > a;)
    acc += std::exp(scheme_.log_weights[k] + u * scheme_.points[k] - b);
  return std::min(acc, 1.0);
}

double NaturalFamily::sample(double u, Rng& rng) const {
  check_domain(u);
  switch (model_) {
    case Model::gaussian_mean: return u + std::normal_distribution<double>(0.0, 1.0)(rng);
    case Model::bernoulli:
      return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < logistic(u) ? 1.0 : 0.0;
    case Model::binomial:
      return static_cast<double>(std::binomial_distribution<int>(trials_, logistic(u))(rng));
    case Model::exponential_rate: return -std::exponential_distribution<double>(u)(rng);
    case Model::gaussian_variance: {
      const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
      return -0.5 * z * z / u;
    }
    case Model::finite: break;
  }
  // Inverse CDF over the outcomes.
  const double b = log_partition(u);
  double target = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (std::size_t k = 0; k + 1 < scheme_.size(); ++k) {
    target -= std::exp(scheme_.log_weights[k] + u * scheme_.points[k] - b);
    if (target < 0.0) return scheme_.points[k];
  }
  return scheme_.points.back();
}

double NaturalFamily::to_natural(double theta) const {
  switch (model_) {
    case Model::bernoulli:
    case Model::binomial:
      if (!(theta > 0.0 && theta < 1.0)) throw std::domain_error("success probability must lie in (0,1)");
      return logit(theta);
    case Model::gaussian_variance:
      if (!(theta > 0.0)) throw std::domain_error("standard deviation must be positive");
      return 1.0 / (theta * theta);
    case Model::exponential_rate:
      if (!(theta > 0.0)) throw std::domain_error("rate must be positive");
      return theta;
    default: return theta;
  }
}

double NaturalFamily::from_natural(double u) const {
  switch (model_) {
    case Model::bernoulli:
    case Model::binomial: return logistic(u);
    case Model::gaussian_variance: check_domain(u); return 1.0 / std::sqrt(u);
    default: return u;
  }
}

double NaturalFamily::transform_observation(double raw) const {
  switch (model_) {
    case Model::exponential_rate: return -raw;
    case Model::gaussian_variance: return -0.5 * raw * raw;
    default: return raw;
  }
}

NaturalFamily make_named_family(std::string_view name, const FamilyParams& params) {
  const auto param = [&](const char* key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  const bool has_window = params.contains("atom_lo") || params.contains("atom_hi");

  NaturalFamily family = [&] {
    if (name == "gaussian-mean") return NaturalFamily::gaussian_mean();
    if (name == "bernoulli") return NaturalFamily::bernoulli();
    if (name == "exponential-rate") return NaturalFamily::exponential_rate();
    if (name == "gaussian-variance") return NaturalFamily::gaussian_variance();
    if (name == "binomial") {
      const double n = param("N", -1.0);
      if (n != std::floor(n)) throw std::invalid_argument("binomial N must be an integer");
      return NaturalFamily::binomial(static_cast<int>(n));
    }
    if (name.starts_with("binomial(") && name.ends_with(")")) {
      const std::string_view digits = name.substr(9, name.size() - 10);
      int n = 0;
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
      if (ec != std::errc{} || ptr != digits.data() + digits.size())
        throw std::invalid_argument("binomial N must be an integer");
      return NaturalFamily::binomial(n);
    }
    throw std::invalid_argument("unknown model: " + std::string(name));
  }();

  if (has_window && family.scheme().kind == ObservationScheme::Kind::continuous) {
    // Rebuild the default rule on the requested window.
    const double lo = param("atom_lo", param("atom_hi", 0.0));
    const double hi = param("atom_hi", lo);
    if (!(lo <= hi)) throw std::invalid_argument("atom_lo must not exceed atom_hi");
    return family.with_window(lo, hi);
  }
  return family;
}

std::vector<std::string> bundled_model_names() {
  return {"gaussian-mean", "bernoulli", "binomial(3)", "exponential-rate", "gaussian-variance"};
}

}  // namespace seqtest
