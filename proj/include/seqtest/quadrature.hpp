#pragma once

#include <span>
#include <vector>

namespace seqtest {

/// Nodes and weights of an interpolatory rule; nodes are strictly increasing.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  double integrate(auto&& f) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) acc += weights[k] * f(nodes[k]);
    return acc;
  }
};

/// n-point Gauss-Legendre rule on [-1, 1]. Results are cached per n.
const QuadratureRule& gauss_legendre(int n);

/// n-point Gauss-Legendre rule mapped to [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

/// Composite Gauss-Legendre over consecutive panels [breaks[i], breaks[i+1]].
QuadratureRule composite_gauss_legendre(std::span<const double> breaks, int nodes_per_panel);

/// Panel breaks 0, first, first*ratio, ... until `extent` is reached (last break == extent).
std::vector<double> geometric_breaks(double first, double ratio, double extent);

/// Breaks covering [lo, hi] with panels no wider than `max_width`.
std::vector<double> uniform_breaks(double lo, double hi, double max_width);

}  // namespace seqtest
