#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "seqtest/io.hpp"
#include "seqtest/numeric.hpp"

using namespace seqtest;
namespace fs = std::filesystem;
using io::Json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "seqtest_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("format_double round trips") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const double x = u(gen) / 7.0;
    CHECK(std::stod(io::format_double(x)) == x);
  }
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::format_double(0.1) == "0.1");
}

TEST_CASE("prior csv round trip") {
  const Prior p = make_prior({-1.25, 0.1, 0.7}, {0.2, 0.5, 0.3}, 0.05);
  const auto path = scratch("prior.csv");
  io::write_prior_csv(path, p);
  const Prior q = io::read_prior_csv(path);
  REQUIRE(q.size() == 3);
  CHECK(q.theta0() == p.theta0());
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(q.atoms()[i] == p.atoms()[i]);
    CHECK(q.log_weights()[i] == doctest::Approx(p.log_weights()[i]).epsilon(1e-15));
  }
}

TEST_CASE("malformed prior csv is rejected with a location") {
  const auto path = scratch("bad_prior.csv");
  io::write_text(path, "# theta0=0\nu,w\n-1,0.5\n1,abc\n");
  CHECK_THROWS_AS(io::read_prior_csv(path), std::invalid_argument);
  try {
    io::read_prior_csv(path);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  io::write_text(path, "u,w\n-1,0.5\n1,0.5\n");
  CHECK_THROWS_AS(io::read_prior_csv(path), std::invalid_argument);
  io::write_text(path, "# theta0=0\nu,v\n-1,0.5\n1,0.5\n");
  CHECK_THROWS_AS(io::read_prior_csv(path), std::invalid_argument);
  CHECK_THROWS(io::read_prior_csv(scratch("missing.csv")));
}

TEST_CASE("family csv") {
  const auto path = scratch("family.csv");
  io::write_text(path, "x,h\n0,1\n1,3\n2,3\n3,1\n");
  const auto f = io::read_family_csv(path);
  CHECK(f.log_partition(0.0) == doctest::Approx(std::log(8.0)));
  CHECK(f.log_partition(0.7) == doctest::Approx(NaturalFamily::binomial(3).log_partition(0.7)));
  io::write_text(path, "x,h\n0,1\n1,0\n");
  CHECK_THROWS_AS(io::read_family_csv(path), std::invalid_argument);
}

TEST_CASE("surface json and boundary csv round trip") {
  const auto f = NaturalFamily::gaussian_mean();
  const auto s = solve(default_prior(f), f, 0.05, 4, SolveOptions{.grid_size = 101});
  const auto path = scratch("surface.json");
  io::write_surface_json(path, s);
  const auto t = io::read_surface_json(path);
  CHECK(t.cost == s.cost);
  CHECK(t.horizon == s.horizon);
  CHECK(t.pi_grid == s.pi_grid);
  CHECK(t.values == s.values);
  CHECK(t.b1 == s.b1);
  CHECK(t.b2 == s.b2);

  const auto bpath = scratch("boundaries.csv");
  io::write_boundaries_csv(bpath, s);
  const auto [b1, b2] = io::read_boundaries_csv(bpath);
  CHECK(b1 == s.b1);
  CHECK(b2 == s.b2);

  Json broken = io::to_json(s);
  broken["values"].erase(0);
  CHECK_THROWS_AS(io::surface_from_json(broken), std::invalid_argument);
}

TEST_CASE("value layers csv has one row per layer and grid point") {
  const auto f = NaturalFamily::bernoulli();
  const auto s = solve(default_prior(f), f, 0.05, 3, SolveOptions{.grid_size = 51});
  const auto path = scratch("layers.csv");
  io::write_value_layers_csv(path, s);
  std::istringstream in(io::read_text(path));
  std::string line;
  std::getline(in, line);
  CHECK(line == "n,pi,V");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == (s.horizon + 1) * static_cast<int>(s.grid_size()));
}

TEST_CASE("report json") {
  CheckReport r;
  r.check = "concavity";
  r.violation = 1e-3;
  r.tolerance = 1e-8;
  r.pass = false;
  const Json j = io::to_json(r);
  CHECK(j["check"] == "concavity");
  CHECK(j["pass"] == false);
  CHECK(j["violation"].get<double>() == 1e-3);
}
