#pragma once

#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace seqtest {

using Rng = std::mt19937_64;

/// Open interval (lo, hi); endpoints may be infinite.
struct Interval {
  double lo;
  double hi;
  bool contains(double u) const { return u > lo && u < hi; }
};

/// The base measure nu as a finite list of weighted points.
///
/// For finite-outcome models the points are the outcomes and the weights are
/// the base weights h(x). For continuous models the points are quadrature
/// nodes and each weight is the quadrature weight times the base density h(x)
/// (change-of-variable Jacobians included), so that every expectation against
/// p_u dnu becomes a finite sum.
struct ObservationScheme {
  enum class Kind { finite, continuous };

  Kind kind = Kind::finite;
  std::vector<double> points;
  std::vector<double> log_weights;

  std::size_t size() const { return points.size(); }
  bool is_finite() const { return kind == Kind::finite; }
};

enum class Model { finite, gaussian_mean, bernoulli, binomial, exponential_rate, gaussian_variance };

/// One-parameter natural exponential family p_u(x) = exp{ux - B(u)} against nu.
///
/// Immutable after construction. Named models carry the transform between
/// their textbook parametrization and the natural one.
class NaturalFamily {
 public:
  /// Custom finite-outcome family. Outcomes must be distinct; base weights positive.
  static NaturalFamily finite(std::string name, std::vector<double> outcomes,
                              std::vector<double> base_weights);
  static NaturalFamily gaussian_mean();
  static NaturalFamily bernoulli();
  static NaturalFamily binomial(int trials);
  static NaturalFamily exponential_rate();
  static NaturalFamily gaussian_variance();

  const std::string& name() const { return name_; }
  Model model() const { return model_; }
  Interval natural_domain() const { return domain_; }
  int trials() const { return trials_; }

  /// Scheme built for the default parameter window.
  const ObservationScheme& scheme() const { return scheme_; }

  /// Scheme whose quadrature window covers every component p_u with u in
  /// [atom_lo, atom_hi]. Finite models return scheme() unchanged.
  ObservationScheme scheme_for(double atom_lo, double atom_hi) const;

  /// Copy whose default scheme is scheme_for(atom_lo, atom_hi).
  NaturalFamily with_window(double atom_lo, double atom_hi) const;

  /// B(u). Throws std::domain_error outside the natural domain.
  double log_partition(double u) const;

  /// u*x - B(u): log density of X against nu.
  double log_density(double u, double x) const { return u * x - log_partition(u); }

  /// log h(x), the base density against Lebesgue (continuous) or counting measure.
  double log_base_density(double x) const;

  /// P(X > a | Theta = u), in closed form for the named continuous models.
  double tail_probability(double u, double a) const;

  double sample(double u, Rng& rng) const;

  // Parametrization. For gaussian-variance the map sigma -> sigma^-2 reverses
  // the order, so a threshold on sigma flips the hypothesis orientation.
  double to_natural(double theta) const;
  double from_natural(double u) const;
  bool reverses_order() const { return model_ == Model::gaussian_variance; }

  /// Maps a raw observation to the natural-form observation (X' = -X, -X^2/2, ...).
  double transform_observation(double raw) const;

 private:
  NaturalFamily() = default;
  void check_domain(double u) const;

  std::string name_;
  Model model_ = Model::finite;
  Interval domain_{};
  int trials_ = 1;
  ObservationScheme scheme_;
};

using FamilyParams = std::map<std::string, double>;

/// Builds a named model: gaussian-mean, bernoulli, binomial (param "N", or the
/// spelling "binomial(N)"), exponential-rate, gaussian-variance. Optional params
/// "atom_lo"/"atom_hi" set the default quadrature window of continuous models.
NaturalFamily make_named_family(std::string_view name, const FamilyParams& params = {});

/// Names accepted by make_named_family (binomial listed as "binomial(3)").
std::vector<std::string> bundled_model_names();

}  // namespace seqtest
