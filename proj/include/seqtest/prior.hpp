#pragma once

#include <span>
#include <vector>

#include "seqtest/expfam.hpp"

namespace seqtest {

/// Finite atomic prior on natural parameters, split by the threshold theta0.
///
/// Atoms equal to theta0 belong to S- (H0 is Theta <= theta0). Construction
/// rejects priors without mass on both sides of the threshold.
class Prior {
 public:
  /// Weights need not be normalized. Throws std::invalid_argument on
  /// non-increasing atoms, non-positive weights or a one-sided ("degenerate") prior.
  Prior(std::vector<double> atoms, std::vector<double> weights, double theta0);

  std::span<const double> atoms() const { return atoms_; }
  std::span<const double> log_weights() const { return log_weights_; }
  double theta0() const { return theta0_; }
  std::size_t size() const { return atoms_.size(); }

  /// Index of the first atom strictly above theta0; atoms [0, split) form S-.
  std::size_t split() const { return split_; }

  /// mu(S+).
  double upper_mass() const;

 private:
  std::vector<double> atoms_;
  std::vector<double> log_weights_;
  double theta0_;
  std::size_t split_;
};

inline Prior make_prior(std::vector<double> atoms, std::vector<double> weights, double theta0) {
  return Prior(std::move(atoms), std::move(weights), theta0);
}

/// Three-atom prior bundled with each named model (equal weights):
/// gaussian-mean {-0.5, 0.1, 0.6} with theta0 = 0; bernoulli and binomial
/// logits of {0.3, 0.45, 0.7} with theta0 = 0; exponential-rate {0.5, 1, 2}
/// with theta0 = 0.8; gaussian-variance sigma in {0.7, 1, 1.5} with
/// sigma0 = 1.2, all in natural coordinates. Throws for custom families.
Prior default_prior(const NaturalFamily& family);

/// Throws std::domain_error unless every atom lies in the family's open natural domain.
void validate_support(const Prior& prior, const NaturalFamily& family);

/// Posterior mu_{n,y}: the prior reweighted by exp{u*y - n*B(u)}.
struct PosteriorState {
  int n = 0;
  double y = 0.0;
  std::vector<double> atoms;
  std::vector<double> log_weights;
};

/// P(Theta <= a) under the state.
double mass_below(const PosteriorState& state, double a);
/// P(Theta > a) under the state, summed directly rather than as 1 - mass_below.
double mass_above(const PosteriorState& state, double a);

/// One support point of Pi_{n+1} given Pi_n = pi.
struct Transition {
  double x;        ///< observation (outcome or quadrature node)
  double next_pi;  ///< q(n+1, y(n,pi) + x)
  double weight;   ///< predictive probability (times quadrature mass)
};

/// Precomputes B at the atoms and the observation scheme for repeated queries.
class PosteriorEngine {
 public:
  PosteriorEngine(Prior prior, NaturalFamily family);

  const Prior& prior() const { return prior_; }
  const NaturalFamily& family() const { return family_; }
  const ObservationScheme& scheme() const { return scheme_; }
  std::span<const double> log_partitions() const { return log_partition_; }

  /// log(q / (1 - q)) at (n, y).
  double log_odds(int n, double y) const;
  double pi_of_y(int n, double y) const;

  /// Inverse of pi_of_y(n, .): doubling bracket from 0, then 80 bisection steps
  /// on the log-odds. Throws std::out_of_range for pi outside (1e-12, 1 - 1e-12).
  double y_of_pi(int n, double pi) const;

  /// Normalized posterior log-weights at (n, y), written into `out` (size = atoms).
  void posterior_log_weights(int n, double y, std::span<double> out) const;
  PosteriorState posterior(int n, double y) const;

  /// Law of Pi_{n+1} given Pi_n = pi, one entry per scheme point.
  std::vector<Transition> transitions(int n, double pi) const;
  /// Same, from the sufficient statistic y directly.
  std::vector<Transition> transitions_from_y(int n, double y) const;

  /// E[(Pi_{n+1} - t)^+ | Pi_n = pi], from the component tail probabilities
  /// P(X > a | u) rather than from the scheme points.
  double stop_loss(int n, double pi, double t) const;

 private:
  Prior prior_;
  NaturalFamily family_;
  ObservationScheme scheme_;
  std::vector<double> log_partition_;
};

PosteriorState posterior(const Prior& prior, const NaturalFamily& family, int n, double y);
double pi_of_y(const Prior& prior, const NaturalFamily& family, int n, double y);
double y_of_pi(const Prior& prior, const NaturalFamily& family, int n, double pi);
std::vector<Transition> transition_distribution(const Prior& prior, const NaturalFamily& family,
                                                int n, double pi);
double stop_loss(const Prior& prior, const NaturalFamily& family, int n, double pi, double t);

}  // namespace seqtest
