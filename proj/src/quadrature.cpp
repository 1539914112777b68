#include "seqtest/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace seqtest {
namespace {

// Newton iteration on the three-term Legendre recurrence, starting from the
// Tricomi approximation of the k-th root.
QuadratureRule compute_gauss_legendre(int n) {
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const QuadratureRule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre order must be positive");
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

QuadratureRule gauss_legendre(int n, double a, double b) {
  const QuadratureRule& ref = gauss_legendre(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  QuadratureRule rule;
  rule.nodes.reserve(n);
  rule.weights.reserve(n);
  for (int k = 0; k < n; ++k) {
    rule.nodes.push_back(mid + half * ref.nodes[k]);
    rule.weights.push_back(half * ref.weights[k]);
  }
  return rule;
}

QuadratureRule composite_gauss_legendre(std::span<const double> breaks, int nodes_per_panel) {
  QuadratureRule rule;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const QuadratureRule panel = gauss_legendre(nodes_per_panel, breaks[i], breaks[i + 1]);
    rule.nodes.insert(rule.nodes.end(), panel.nodes.begin(), panel.nodes.end());
    rule.weights.insert(rule.weights.end(), panel.weights.begin(), panel.weights.end());
  }
  return rule;
}

std::vector<double> geometric_breaks(double first, double ratio, double extent) {
  if (!(first > 0.0) || !(ratio > 1.0)) throw std::invalid_argument("invalid geometric panel layout");
  std::vector<double> breaks{0.0};
  double edge = std::min(first, extent);
  while (edge < extent) {
    breaks.push_back(edge);
    edge *= ratio;
  }
  breaks.push_back(extent);
  return breaks;
}

std::vector<double> uniform_breaks(double lo, double hi, double max_width) {
  const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_width)));
  std::vector<double> breaks(panels + 1);
  for (int i = 0; i <= panels; ++i) breaks[i] = lo + (hi - lo) * i / panels;
  breaks.back() = hi;
  return breaks;
}

}  // namespace seqtest
