#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "seqtest/expfam.hpp"
#include "seqtest/numeric.hpp"

using namespace seqtest;

namespace {

// Sum of h(x) p_u(x) over the scheme, optionally weighted by g(x).
double scheme_expectation(const NaturalFamily& f, const ObservationScheme& s, double u, auto&& g) {
  double acc = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k)
    acc += std::exp(s.log_weights[k] + f.log_density(u, s.points[k])) * g(s.points[k]);
  return acc;
}

}  // namespace

TEST_CASE("log partition values") {
  CHECK(NaturalFamily::gaussian_mean().log_partition(3.0) == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(NaturalFamily::bernoulli().log_partition(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const auto two = NaturalFamily::finite("two", {0.0, 1.0}, {1.0, 1.0});
  CHECK(two.log_partition(1.0) == doctest::Approx(std::log1p(std::numbers::e)).epsilon(1e-15));
  CHECK(NaturalFamily::exponential_rate().log_partition(2.0) == doctest::Approx(-std::log(2.0)));
  CHECK(NaturalFamily::gaussian_variance().log_partition(4.0) == doctest::Approx(-0.5 * std::log(4.0)));
}

TEST_CASE("log partition rejects parameters outside the natural domain") {
  CHECK_THROWS_WITH_AS(NaturalFamily::exponential_rate().log_partition(0.0),
                       "parameter outside natural domain", std::domain_error);
  CHECK_THROWS_AS(NaturalFamily::gaussian_variance().log_partition(-1.0), std::domain_error);
}

TEST_CASE("log density values") {
  const auto g = NaturalFamily::gaussian_mean();
  CHECK(g.log_density(0.0, 7.0) == 0.0);
  CHECK(g.log_density(2.0, 1.0) == doctest::Approx(0.0));
  CHECK(NaturalFamily::bernoulli().log_density(0.0, 1.0) == doctest::Approx(-std::log(2.0)));
}

TEST_CASE("named families and their parameter maps") {
  const auto ber = make_named_family("bernoulli");
  CHECK(ber.to_natural(0.5) == doctest::Approx(0.0));
  CHECK(make_named_family("exponential-rate").transform_observation(2.0) == -2.0);

  const auto var = make_named_family("gaussian-variance");
  CHECK(var.to_natural(2.0) == doctest::Approx(0.25));
  CHECK(var.to_natural(1.0) == doctest::Approx(1.0));
  CHECK(var.reverses_order());
  CHECK(var.transform_observation(2.0) == -2.0);

  CHECK(make_named_family("binomial(3)").trials() == 3);
  CHECK(make_named_family("binomial", {{"N", 4}}).trials() == 4);
  CHECK_THROWS_AS(make_named_family("binomial", {{"N", 0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_named_family("poisson"), std::invalid_argument);
  CHECK(bundled_model_names().size() == 5);
}

TEST_CASE("parameter maps round trip") {
  for (const auto& name : bundled_model_names()) {
    const auto f = make_named_family(name);
    for (double u : {0.3, 0.9, 1.7, 2.5}) CHECK(f.to_natural(f.from_natural(u)) == doctest::Approx(u).epsilon(1e-12));
  }
}

TEST_CASE("finite schemes normalize") {
  for (const auto& f : {NaturalFamily::bernoulli(), NaturalFamily::binomial(3), NaturalFamily::binomial(7),
                        NaturalFamily::finite("three", {-1.0, 0.5, 2.0}, {0.2, 1.0, 3.0})}) {
    for (double u : {-3.0, -0.4, 0.0, 1.1, 4.0}) {
      const double total = scheme_expectation(f, f.scheme(), u, [](double) { return 1.0; });
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("continuous schemes normalize and reproduce the mean B'(u)") {
  for (const auto& f : {NaturalFamily::gaussian_mean(), NaturalFamily::exponential_rate(),
                        NaturalFamily::gaussian_variance()}) {
    const auto scheme = f.scheme_for(0.5, 2.0);
    CHECK(!scheme.is_finite());
    for (std::size_t k = 1; k < scheme.size(); ++k) CHECK(scheme.points[k] > scheme.points[k - 1]);
    for (double u : {0.5, 1.0, 2.0}) {
      const double total = scheme_expectation(f, scheme, u, [](double) { return 1.0; });
      CHECK(std::abs(total - 1.0) <= 1e-12);
      const double h = 1e-5;
      const double slope = (f.log_partition(u + h) - f.log_partition(u - h)) / (2 * h);
      const double mean = scheme_expectation(f, scheme, u, [](double x) { return x; });
      CHECK(mean == doctest::Approx(slope).epsilon(1e-8));
    }
  }
}

TEST_CASE("log partition is convex") {
  for (const auto& name : bundled_model_names()) {
    const auto f = make_named_family(name);
    for (double u1 = 0.2; u1 < 3.0; u1 += 0.37) {
      const double u2 = u1 + 0.3;
      const double u3 = u1 + 0.9;
      const double chord = f.log_partition(u1) + (f.log_partition(u3) - f.log_partition(u1)) * (u2 - u1) / (u3 - u1);
      CHECK(f.log_partition(u2) <= chord + 1e-12);
    }
  }
}

TEST_CASE("tail probabilities increase in the parameter") {
  for (const auto& name : bundled_model_names()) {
    const auto f = make_named_family(name);
    for (double t : {-3.0, -1.0, -0.2, 0.0, 0.5, 1.0, 2.5}) {
      double prev = -1.0;
      for (double u = 0.25; u < 3.0; u += 0.25) {
        const double tail = f.tail_probability(u, t);
        CHECK(tail >= prev - 1e-15);
        prev = tail;
      }
    }
  }
}

TEST_CASE("closed-form tails agree with the quadrature schemes") {
  for (const auto& f : {NaturalFamily::gaussian_mean(), NaturalFamily::exponential_rate(),
                        NaturalFamily::gaussian_variance()}) {
    const auto scheme = f.scheme_for(0.5, 2.0);
    for (double u : {0.5, 1.3}) {
      for (double a : {-2.0, -0.7, -0.1}) {
        // Only compare where no panel straddles a (the indicator is not smooth).
        const double by_rule = scheme_expectation(f, scheme, u, [a](double x) { return x > a ? 1.0 : 0.0; });
        CHECK(by_rule == doctest::Approx(f.tail_probability(u, a)).epsilon(2e-2));
      }
    }
  }
}

TEST_CASE("samplers have the right means") {
  Rng rng(7);
  const auto mean_of = [&](const NaturalFamily& f, double u, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += f.sample(u, rng);
    return acc / n;
  };
  CHECK(std::abs(mean_of(NaturalFamily::bernoulli(), 0.0, 100000) - 0.5) <= 0.005);
  CHECK(std::abs(mean_of(NaturalFamily::gaussian_mean(), 1.0, 100000) - 1.0) <= 0.01);
  CHECK(std::abs(mean_of(NaturalFamily::exponential_rate(), 2.0, 100000) + 0.5) <= 0.005);
  CHECK(std::abs(mean_of(NaturalFamily::gaussian_variance(), 2.0, 100000) + 0.25) <= 0.005);
  CHECK(std::abs(mean_of(NaturalFamily::binomial(3), logit(0.3), 100000) - 0.9) <= 0.01);
}

TEST_CASE("sampling is deterministic given the generator state") {
  Rng a(11), b(11);
  const auto f = NaturalFamily::gaussian_mean();
  for (int i = 0; i < 10; ++i) CHECK(f.sample(0.3, a) == f.sample(0.3, b));
}

TEST_CASE("finite family validation") {
  CHECK_THROWS_AS(NaturalFamily::finite("dup", {0.0, 0.0}, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(NaturalFamily::finite("neg", {0.0, 1.0}, {1.0, 0.0}), std::invalid_argument);
}
