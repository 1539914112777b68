#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "seqtest/numeric.hpp"
#include "seqtest/simulator.hpp"
#include "seqtest/solver.hpp"

using namespace seqtest;

namespace {

Prior benchmark_prior() { return make_prior({logit(0.3), logit(0.7)}, {1.0, 1.0}, 0.0); }

std::vector<double> gain_layer(const std::vector<double>& grid) {
  std::vector<double> out;
  for (double p : grid) out.push_back(gain(p));
  return out;
}

}  // namespace

TEST_CASE("pi grid contains the endpoints, the midpoint and pinned points") {
  const std::vector<double> pinned{0.123456789, 0.5 + 1e-15};
  const auto grid = make_pi_grid(10, GridSpacing::uniform, pinned);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  CHECK(std::find(grid.begin(), grid.end(), 0.5) != grid.end());
  CHECK(std::find(grid.begin(), grid.end(), 0.123456789) != grid.end());
  for (std::size_t j = 1; j < grid.size(); ++j) CHECK(grid[j] - grid[j - 1] >= 1e-13);

  const auto cosine = make_pi_grid(101, GridSpacing::cosine);
  CHECK(cosine.size() == 101);
  CHECK(cosine[1] - cosine[0] < cosine[51] - cosine[50]);
  CHECK_THROWS_AS(make_pi_grid(2), std::invalid_argument);
}

TEST_CASE("interpolation is piecewise linear and clamped") {
  const std::vector<double> grid{0.0, 0.5, 1.0};
  const std::vector<double> v{0.0, 1.0, 0.0};
  CHECK(interpolate(grid, v, 0.25) == doctest::Approx(0.5));
  CHECK(interpolate(grid, v, 0.5) == 1.0);
  CHECK(interpolate(grid, v, -1.0) == 0.0);
  CHECK(interpolate(grid, v, 2.0) == 0.0);
}

TEST_CASE("bellman step with a prohibitive cost returns the gain") {
  const auto grid = make_pi_grid(201);
  const auto next = gain_layer(grid);
  const auto out = bellman_step(next, 3, grid, benchmark_prior(), NaturalFamily::bernoulli(), 0.5);
  for (std::size_t j = 0; j < grid.size(); ++j) CHECK(out[j] == doctest::Approx(gain(grid[j])).epsilon(1e-15));
}

TEST_CASE("bellman step against a zero layer returns min(gain, c)") {
  const auto grid = make_pi_grid(201);
  const std::vector<double> zero(grid.size(), 0.0);
  for (const auto& f : {NaturalFamily::bernoulli(), NaturalFamily::gaussian_mean()}) {
    const Prior p = make_prior({-0.8, 0.8}, {1.0, 1.0}, 0.0);
    const auto out = bellman_step(zero, 1, grid, p, f, 0.1);
    for (std::size_t j = 1; j + 1 < grid.size(); ++j)
      CHECK(out[j] == doctest::Approx(std::min(gain(grid[j]), 0.1)).epsilon(1e-13));
    CHECK(out.front() == 0.0);
    CHECK(out.back() == 0.0);
  }
}

TEST_CASE("one bellman step from the terminal layer matches two-outcome enumeration") {
  // From pi = 1/2 a success moves the posterior to 0.7 and a failure to 0.3,
  // each with predictive probability 1/2.
  const auto grid = make_pi_grid(2001);
  const auto out = bellman_step(gain_layer(grid), 0, grid, benchmark_prior(), NaturalFamily::bernoulli(), 0.05);
  const std::size_t mid = std::find(grid.begin(), grid.end(), 0.5) - grid.begin();
  CHECK(out[mid] == doctest::Approx(std::min(0.5, 0.05 + 0.5 * 0.3 + 0.5 * 0.3)).epsilon(1e-12));
}

TEST_CASE("solve validates its inputs") {
  CHECK_THROWS_AS(solve(benchmark_prior(), NaturalFamily::bernoulli(), 0.05, 0), std::invalid_argument);
  CHECK_THROWS_AS(solve(benchmark_prior(), NaturalFamily::bernoulli(), 0.0, 3), std::invalid_argument);
  SolveOptions tiny;
  tiny.grid_size = 2;
  CHECK_THROWS_AS(solve(benchmark_prior(), NaturalFamily::bernoulli(), 0.05, 3, tiny), std::invalid_argument);
}

TEST_CASE("a horizon of one is a single bellman step of the gain") {
  SolveOptions o;
  o.grid_size = 301;
  const auto s = solve(benchmark_prior(), NaturalFamily::bernoulli(), 0.05, 1, o);
  const auto step = bellman_step(gain_layer(s.pi_grid), 0, s.pi_grid, benchmark_prior(), NaturalFamily::bernoulli(), 0.05);
  for (std::size_t j = 0; j < s.grid_size(); ++j) CHECK(s.at(0, j) == step[j]);
}

TEST_CASE("prohibitive cost: value is the gain and every layer stops") {
  SolveOptions o;
  o.grid_size = 401;
  for (const auto& name : bundled_model_names()) {
    const auto f = make_named_family(name);
    const auto s = solve(default_prior(f), f, 0.6, 5, o);
    for (int n = 0; n <= 5; ++n) {
      for (std::size_t j = 0; j < s.grid_size(); ++j) CHECK(s.at(n, j) == gain(s.pi_grid[j]));
      CHECK(s.b1[n] == 0.5);
      CHECK(s.b2[n] == 0.5);
    }
  }
}

TEST_CASE("benchmark: grid value equals the frozen exact value") {
  // 337/1000 was obtained with exact rational arithmetic, independently of this code.
  const auto f = NaturalFamily::bernoulli();
  SolveOptions o;
  o.pinned = reachable_pis(benchmark_prior(), f, 4);
  const auto s = solve(benchmark_prior(), f, 0.05, 4, o);
  CHECK(std::abs(s.interpolate(0, 0.5) - 0.337) <= 1e-12);
  CHECK(std::abs(brute_force_value(benchmark_prior(), f, 0.05, 4) - 0.337) <= 1e-12);
}

TEST_CASE("boundaries: terminal collapse and a nonempty continuation interval") {
  const auto s = solve(benchmark_prior(), NaturalFamily::bernoulli(), 0.05, choose_horizon(0.05, 0.1));
  CHECK(s.b1.back() == 0.5);
  CHECK(s.b2.back() == 0.5);
  CHECK(s.b1[0] < 0.5);
  CHECK(s.b2[0] > 0.5);
  const auto bracket = boundary_bracket(s, 0);
  CHECK(bracket.b1 < bracket.b1_inner);
  CHECK(bracket.b2_inner < bracket.b2);
}

TEST_CASE("policy decisions") {
  const auto s = solve(benchmark_prior(), NaturalFamily::bernoulli(), 0.05, 12);
  const auto far = policy_decide(s, 0, 0.999);
  CHECK(far.action == PolicyDecision::Action::stop);
  CHECK(far.accept == 1);
  CHECK(policy_decide(s, 0, 0.5).action == PolicyDecision::Action::keep_sampling);
  CHECK(policy_decide(s, 12, 0.5).action == PolicyDecision::Action::stop);

  const auto costly = solve(benchmark_prior(), NaturalFamily::bernoulli(), 0.6, 3);
  const auto tie = policy_decide(costly, 0, 0.5);
  CHECK(tie.action == PolicyDecision::Action::stop);
  CHECK(tie.accept == 0);
  CHECK_THROWS_AS(policy_decide(s, 13, 0.5), std::out_of_range);
}

TEST_CASE("choose_horizon arithmetic") {
  CHECK(choose_horizon(0.25, 0.25) == 3);
  CHECK(choose_horizon(0.05, 0.1) == 12);
  CHECK(choose_horizon(0.05, 1.0) == 30);
  CHECK_THROWS_AS(choose_horizon(0.0, 0.1), std::invalid_argument);
}

TEST_CASE("doubling a generous horizon barely moves the benchmark value") {
  // With slack 1 the truncation bias is far below 1e-6; with slack 0.1 it is not.
  const auto f = NaturalFamily::bernoulli();
  const int n = choose_horizon(0.05, 1.0);
  const double v1 = solve(benchmark_prior(), f, 0.05, n).interpolate(0, 0.5);
  const double v2 = solve(benchmark_prior(), f, 0.05, 2 * n).interpolate(0, 0.5);
  CHECK(std::abs(v1 - v2) < 1e-6);
}

TEST_CASE("surface invariants on every bundled model") {
  SolveOptions o;
  o.grid_size = 401;
  for (const auto& name : bundled_model_names()) {
    CAPTURE(name);
    const auto f = make_named_family(name);
    const double c = 0.05;
    const auto s = solve(default_prior(f), f, c, 8, o);
    for (int n = 0; n <= s.horizon; ++n) {
      CHECK(s.at(n, 0) == 0.0);
      CHECK(s.at(n, s.grid_size() - 1) == 0.0);
      CHECK(s.b1[n] <= 0.5);
      CHECK(s.b2[n] >= 0.5);
      // The continuation set is one run of grid points.
      int runs = 0;
      bool inside = false;
      for (std::size_t j = 0; j < s.grid_size(); ++j) {
        const double g = gain(s.pi_grid[j]);
        CHECK(s.at(n, j) >= 0.0);
        CHECK(s.at(n, j) <= g);
        if (n == s.horizon) CHECK(s.at(n, j) == g);
        const bool cont = s.at(n, j) < g - 1e-12;
        if (cont && !inside) ++runs;
        inside = cont;
      }
      CHECK(runs <= 1);
    }
  }
}

TEST_CASE("value is non-increasing in the horizon") {
  SolveOptions o;
  o.grid_size = 401;
  for (const auto& name : {"bernoulli", "gaussian-mean", "exponential-rate"}) {
    const auto f = make_named_family(name);
    const auto shorter = solve(default_prior(f), f, 0.05, 6, o);
    const auto longer = solve(default_prior(f), f, 0.05, 7, o);
    // Layer n of the longer problem has one more step to go than layer n of the shorter one.
    for (int n = 0; n <= 6; ++n)
      for (std::size_t j = 0; j < shorter.grid_size(); ++j) CHECK(longer.at(n, j) <= shorter.at(n, j) + 1e-15);
  }
}

TEST_CASE("dominance by one more observation followed by stopping") {
  SolveOptions o;
  o.grid_size = 401;
  const auto f = NaturalFamily::binomial(3);
  const Prior p = default_prior(f);
  const auto s = solve(p, f, 0.05, 8, o);
  for (int n = 0; n < s.horizon; ++n) {
    const auto one_more = bellman_step(gain_layer(s.pi_grid), n, s.pi_grid, p, f, 0.05);
    for (std::size_t j = 1; j + 1 < s.grid_size(); ++j) CHECK(s.at(n, j) <= one_more[j] + 1e-15);
  }
}

TEST_CASE("re-applying a bellman step reproduces the layer bit for bit") {
  SolveOptions o;
  o.grid_size = 301;
  for (const auto& name : {"bernoulli", "gaussian-variance"}) {
    const auto f = make_named_family(name);
    const Prior p = default_prior(f);
    const auto s = solve(p, f, 0.05, 5, o);
    for (int n = 0; n < 5; ++n) {
      const auto again = bellman_step(s.layer(n + 1), n, s.pi_grid, p, f, 0.05, o);
      for (std::size_t j = 0; j < s.grid_size(); ++j) CHECK(again[j] == s.at(n, j));
    }
  }
}

TEST_CASE("worker threads do not change the result") {
  SolveOptions one, four;
  one.grid_size = four.grid_size = 501;
  four.threads = 4;
  const auto f = NaturalFamily::gaussian_mean();
  const auto a = solve(default_prior(f), f, 0.05, 6, one);
  const auto b = solve(default_prior(f), f, 0.05, 6, four);
  CHECK(a.values == b.values);
}

TEST_CASE("continuous bellman step matches independent adaptive integration") {
  // Reference values from an adaptive integrator (split at every kink of the
  // interpolant) run outside this code base.
  const std::vector<double> grid{0.0, 0.2, 0.45, 0.5, 0.7, 1.0};
  const std::vector<double> next{0.0, 0.15, 0.3, 0.31, 0.22, 0.0};
  const std::vector<std::pair<const char*, std::vector<double>>> expected{
      {"gaussian-mean", {0.15207752362435814, 0.2479463098996263, 0.2501261532906786, 0.20150274744836716}},
      {"exponential-rate", {0.15393245902040675, 0.25548533912583576, 0.2524860935417434, 0.18778151907860974}},
      {"gaussian-variance", {0.15524918816895888, 0.27103298394223113, 0.2657527552291054, 0.19647987635918046}},
  };
  for (const auto& [name, values] : expected) {
    CAPTURE(name);
    const auto f = make_named_family(name);
    const auto out = bellman_step(next, 2, grid, default_prior(f), f, 0.01);
    for (std::size_t j = 1; j + 1 < grid.size(); ++j) CHECK(std::abs(out[j] - values[j - 1]) <= 1e-12);
  }
}

TEST_CASE("closed-form expectation agrees with quadrature on continuous models") {
  // Kinks of the interpolant cost the fixed panels some accuracy (worst for
  // the wide gaussian-mean panels, about 4e-5 here).
  const std::vector<double> grid{0.0, 0.2, 0.45, 0.5, 0.7, 1.0};
  const std::vector<double> next{0.0, 0.15, 0.3, 0.31, 0.22, 0.0};
  SolveOptions exact, quad;
  quad.expectation = ContinuousExpectation::quadrature;
  for (const auto& name : {"gaussian-mean", "exponential-rate", "gaussian-variance"}) {
    CAPTURE(name);
    const auto f = make_named_family(name);
    const Prior p = default_prior(f);
    const auto a = bellman_step(next, 2, grid, p, f, 0.01, exact);
    const auto b = bellman_step(next, 2, grid, p, f, 0.01, quad);
    for (std::size_t j = 1; j + 1 < grid.size(); ++j) CHECK(std::abs(a[j] - b[j]) <= 1e-4);
  }
}

TEST_CASE("scheduled solve with full schedule equals the plain solve") {
  SolveOptions o;
  o.grid_size = 401;
  const auto f = NaturalFamily::bernoulli();
  const Prior p = make_prior({-1.0, 0.2, 0.9}, {0.3, 0.3, 0.4}, 0.0);
  const auto plain = solve(p, f, 0.07, 6, o);
  StepSchedule every{[](int) { return 0.07; }, [](int) { return true; }};
  const auto scheduled = solve_scheduled(p, f, 6, every, o);
  for (std::size_t k = 0; k < plain.values.size(); ++k)
    CHECK(scheduled.values[k] == doctest::Approx(plain.values[k]).epsilon(1e-14));
}
