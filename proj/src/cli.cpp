#include "seqtest/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/uniform.hpp>

#include "CLI11.hpp"
#include "seqtest/io.hpp"
#include "seqtest/numeric.hpp"
#include "seqtest/simulator.hpp"
#include "seqtest/verifier.hpp"

namespace seqtest::cli {
namespace {

namespace fs = std::filesystem;
using io::Json;

// Raised for bad flag values and inconsistent configurations (exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat JSON view of a subcommand's effective options. Flags become booleans,
// multi-valued options arrays, everything else the string as given.
Json options_json(const CLI::App& sub, bool default_also) {
  Json j = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help") continue;
    const bool flag = opt->get_type_size_max() == 0;
    const bool multi = opt->get_items_expected_max() > 1;
    if (opt->count() > 0) {
      if (flag) j[name] = opt->as<bool>();
      else if (multi) j[name] = opt->results();
      else j[name] = opt->results().back();
    } else if (default_also && !opt->get_default_str().empty() && !flag && !multi) {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    Json root = Json::object();
    for (const CLI::App* sub : app->get_subcommands()) root[sub->get_name()] = options_json(*sub, default_also);
    return root.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    Json j;
    try {
      j = Json::parse(input);
    } catch (const Json::parse_error& e) {
      throw CLI::ConfigError(std::string("config file: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConfigError("config file: top level must be an object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void flatten(const Json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        flatten(value, nested, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array())
        for (const Json& e : value) item.inputs.push_back(scalar(e));
      else
        item.inputs.push_back(scalar(value));
      items.push_back(std::move(item));
    }
  }
};

void echo_config(const CLI::App& sub, const fs::path& dir) {
  Json root;
  root[sub.get_name()] = options_json(sub, true);
  io::write_text(dir / "run_config.json", root.dump(2) + "\n");
}

void print_line(const Json& j) { std::cout << j.dump() << '\n'; }

// ---------------------------------------------------------------- model/prior

struct ModelArgs {
  std::string model = "bernoulli";
  std::string family_csv;
  std::string prior_csv;
  std::vector<double> atoms;
  std::vector<double> weights;
  std::optional<double> theta0;
  std::string prior_dist;
  int prior_atoms = 101;
  bool original = false;
};

void add_model_options(CLI::App* sub, ModelArgs& m) {
  sub->add_option("--model", m.model, "gaussian-mean, bernoulli, binomial(N), exponential-rate, gaussian-variance")
      ->capture_default_str();
  sub->add_option("--family-csv", m.family_csv, "custom finite family, CSV with header x,h");
  auto* prior = sub->add_option("--prior", m.prior_csv, "prior CSV: '# theta0=' line, then header u,w");
  auto* atoms = sub->add_option("--atoms", m.atoms, "inline prior atoms")->delimiter(',');
  sub->add_option("--weights", m.weights, "inline prior weights (default equal)")->delimiter(',');
  sub->add_option("--theta0", m.theta0, "threshold; H0 is Theta <= theta0");
  auto* dist = sub->add_option("--prior-dist", m.prior_dist,
                               "continuous prior to discretize, e.g. normal:0,1 or beta:2,2");
  sub->add_option("--prior-atoms", m.prior_atoms, "atoms used by --prior-dist")->capture_default_str();
  sub->add_flag("--original-params", m.original,
                "prior atoms and theta0 are in the model's original parametrization");
  prior->excludes(atoms);
  prior->excludes(dist);
  atoms->excludes(dist);
}

struct Loaded {
  NaturalFamily family;
  Prior prior;
  std::string note;
};

Loaded load_model(const ModelArgs& m) {
  NaturalFamily family = [&] {
    if (!m.family_csv.empty()) return io::read_family_csv(m.family_csv);
    try {
      return make_named_family(m.model);
    } catch (const std::exception& e) {
      throw UsageError(std::string("--model: ") + e.what());
    }
  }();

  std::vector<double> atoms;
  std::vector<double> weights;
  double theta0 = 0.0;
  std::string field;
  if (!m.prior_csv.empty()) {
    const Prior p = io::read_prior_csv(m.prior_csv);
    atoms.assign(p.atoms().begin(), p.atoms().end());
    for (double lw : p.log_weights()) weights.push_back(std::exp(lw));
    theta0 = m.theta0.value_or(p.theta0());
    field = "--prior";
  } else if (!m.atoms.empty() || !m.prior_dist.empty()) {
    if (!m.theta0) throw UsageError("--theta0: required with --atoms or --prior-dist");
    theta0 = *m.theta0;
    if (!m.atoms.empty()) {
      atoms = m.atoms;
      weights = m.weights.empty() ? std::vector<double>(atoms.size(), 1.0) : m.weights;
      field = "--atoms";
    } else {
      if (m.prior_atoms < 1) throw UsageError("--prior-atoms: must be at least 1");
      atoms = discretize_distribution(m.prior_dist, m.prior_atoms);
      weights.assign(atoms.size(), 1.0);
      field = "--prior-dist";
    }
  } else {
    const Prior p = default_prior(family);
    atoms.assign(p.atoms().begin(), p.atoms().end());
    for (double lw : p.log_weights()) weights.push_back(std::exp(lw));
    theta0 = m.theta0.value_or(p.theta0());
    field = "default prior";
    if (m.original) throw UsageError("--original-params: needs --prior, --atoms or --prior-dist");
  }

  std::string note;
  if (m.original) {
    try {
      for (double& a : atoms) a = family.to_natural(a);
      theta0 = family.to_natural(theta0);
    } catch (const std::exception& e) {
      throw UsageError(field + ": " + e.what());
    }
    if (family.reverses_order()) {
      std::reverse(atoms.begin(), atoms.end());
      std::reverse(weights.begin(), weights.end());
    }
  }
  if (m.original && family.reverses_order())
    note = "natural parametrization reverses order: accept=1 means the original parameter is below its threshold";

  try {
    Prior prior(atoms, weights, theta0);
    validate_support(prior, family);
    return {std::move(family), std::move(prior), note};
  } catch (const std::exception& e) {
    throw UsageError(field + ": " + e.what());
  }
}

// ---------------------------------------------------------------- solving

struct SolveArgs {
  std::optional<double> cost;
  std::string horizon = "auto";
  double slack = 0.25;
  int grid_size = 2001;
  std::string spacing = "uniform";
  std::string expectation = "exact";
  int threads = 1;
};

void add_solve_options(CLI::App* sub, SolveArgs& s) {
  sub->add_option("--cost", s.cost, "cost per observation, c > 0");
  sub->add_option("--horizon", s.horizon, "truncation horizon N, or auto")->capture_default_str();
  sub->add_option("--slack", s.slack, "slack used by --horizon auto")->capture_default_str();
  sub->add_option("--grid-size", s.grid_size, "number of uniform pi-grid points")->capture_default_str();
  sub->add_option("--spacing", s.spacing, "uniform or cosine")->capture_default_str();
  sub->add_option("--expectation", s.expectation, "continuous models: exact or quadrature")
      ->capture_default_str();
}

double require_cost(const SolveArgs& s) {
  if (!s.cost) throw UsageError("--cost: required");
  if (!(*s.cost > 0.0) || !std::isfinite(*s.cost)) throw UsageError("--cost: cost must be positive");
  return *s.cost;
}

int resolve_horizon(const SolveArgs& s, double cost) {
  if (s.horizon == "auto") {
    if (!(s.slack > 0.0)) throw UsageError("--slack: must be positive");
    return choose_horizon(cost, s.slack);
  }
  int h = 0;
  const auto [ptr, ec] = std::from_chars(s.horizon.data(), s.horizon.data() + s.horizon.size(), h);
  if (ec != std::errc() || ptr != s.horizon.data() + s.horizon.size() || h < 1)
    throw UsageError("--horizon: must be a positive integer or 'auto'");
  return h;
}

SolveOptions solve_options(const SolveArgs& s) {
  if (s.grid_size < 3) throw UsageError("--grid-size: must be at least 3");
  if (s.threads < 1) throw UsageError("--threads: must be at least 1");
  SolveOptions o;
  o.grid_size = s.grid_size;
  o.threads = s.threads;
  if (s.spacing == "uniform") o.spacing = GridSpacing::uniform;
  else if (s.spacing == "cosine") o.spacing = GridSpacing::cosine;
  else throw UsageError("--spacing: expected uniform or cosine");
  if (s.expectation == "exact") o.expectation = ContinuousExpectation::exact;
  else if (s.expectation == "quadrature") o.expectation = ContinuousExpectation::quadrature;
  else throw UsageError("--expectation: expected exact or quadrature");
  return o;
}

ValueSurface solve_from(const Loaded& model, const SolveArgs& s) {
  const double c = require_cost(s);
  return solve(model.prior, model.family, c, resolve_horizon(s, c), solve_options(s));
}

ValueSurface load_surface(const std::string& path) {
  try {
    return io::read_surface_json(path);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--surface: ") + e.what());
  }
}

Json surface_summary(const ValueSurface& surface, const Prior& prior) {
  const double root = prior.upper_mass();
  Json j;
  j["root_pi"] = root;
  j["value"] = surface.interpolate(0, root);
  j["cost"] = surface.cost;
  j["horizon"] = surface.horizon;
  j["grid_size"] = surface.grid_size();
  j["b1_0"] = surface.b1[0];
  j["b2_0"] = surface.b2[0];
  return j;
}

// ---------------------------------------------------------------- commands

struct Common {
  std::string out;
  std::uint64_t seed = 1;
  int threads = 1;
};

int cmd_solve(const CLI::App& sub, const ModelArgs& m, const SolveArgs& s, const Common& c) {
  const Loaded model = load_model(m);
  const ValueSurface surface = solve_from(model, s);
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  io::write_surface_json(dir / "surface.json", surface);
  io::write_boundaries_csv(dir / "boundaries.csv", surface);
  echo_config(sub, dir);
  Json line{{"command", "solve"}};
  line.update(surface_summary(surface, model.prior));
  if (!model.note.empty()) line["note"] = model.note;
  print_line(line);
  return 0;
}

int cmd_boundaries(const CLI::App& sub, const std::string& surface_path, const Common& c) {
  const ValueSurface surface = load_surface(surface_path);
  std::cout << "n,b1,b1_inner,b2_inner,b2\n";
  for (int n = 0; n <= surface.horizon; ++n) {
    const BoundaryBracket b = boundary_bracket(surface, n);
    std::cout << n << ',' << io::format_double(b.b1) << ',' << io::format_double(b.b1_inner) << ','
              << io::format_double(b.b2_inner) << ',' << io::format_double(b.b2) << '\n';
  }
  if (!c.out.empty()) {
    io::write_boundaries_csv(fs::path(c.out) / "boundaries.csv", surface);
    echo_config(sub, c.out);
  }
  return 0;
}

struct VerifyArgs {
  std::vector<std::string> checks{"all"};
  std::string surface;
  std::optional<double> tol;
  std::vector<double> pis{0.25, 0.5, 0.75};
  std::optional<double> a;
  std::optional<double> b;
  double pi1 = 0.3;
  double pi2 = 0.7;
  int n_max = 15;
  std::vector<std::string> pairs{"0:1", "0:5", "2:8"};
  std::vector<int> trials{1, 2, 3};
  int burn = -1;
};

int cmd_verify(const CLI::App& sub, const ModelArgs& m, const SolveArgs& s, const VerifyArgs& v,
               const Common& c) {
  static const std::vector<std::string> known{"concavity",   "time-monotonicity", "concentration",
                                              "level-spread", "convex-order",     "binomial-reduction"};
  std::vector<std::string> checks;
  for (const std::string& name : v.checks) {
    if (name == "all") {
      checks.insert(checks.end(), known.begin(), known.end() - 1);
      continue;
    }
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw UsageError("--check: unknown check '" + name + "'");
    checks.push_back(name);
  }
  const auto wants = [&](const std::string& name) {
    return std::find(checks.begin(), checks.end(), name) != checks.end();
  };
  const bool needs_surface = wants("concavity") || wants("time-monotonicity");
  const bool needs_model = wants("concentration") || wants("level-spread") || wants("convex-order") ||
                           wants("binomial-reduction") || (needs_surface && v.surface.empty());

  std::optional<Loaded> model;
  if (needs_model) model = load_model(m);
  std::optional<ValueSurface> surface;
  if (needs_surface) surface = v.surface.empty() ? solve_from(*model, s) : load_surface(v.surface);

  std::vector<CheckReport> reports;
  const double measure_tol = v.tol.value_or(1e-8);
  const double solver_tol = v.tol.value_or(1e-6);
  if (wants("concavity")) reports.push_back(check_concavity(*surface, measure_tol));
  if (wants("time-monotonicity")) reports.push_back(check_time_monotonicity(*surface, solver_tol, v.burn));
  if (wants("concentration")) {
    const Prior& p = model->prior;
    const double theta0 = p.theta0();
    const double a = v.a.value_or(p.atoms().front() < theta0 ? 0.5 * (p.atoms().front() + theta0)
                                                             : theta0 - 1.0);
    const double b = v.b.value_or(0.5 * (p.atoms().back() + theta0));
    for (double pi : v.pis)
      reports.push_back(check_concentration(p, model->family, pi, a, b, v.n_max, measure_tol));
  }
  if (wants("level-spread"))
    reports.push_back(check_level_spread(model->prior, model->family, v.pi1, v.pi2, v.n_max, measure_tol));
  if (wants("convex-order")) {
    for (const std::string& pair : v.pairs) {
      const auto colon = pair.find(':');
      int mm = -1, nn = -1;
      if (colon != std::string::npos) {
        std::from_chars(pair.data(), pair.data() + colon, mm);
        std::from_chars(pair.data() + colon + 1, pair.data() + pair.size(), nn);
      }
      if (mm < 0 || nn < mm) throw UsageError("--pairs: expected m:n with 0 <= m <= n, got '" + pair + "'");
      for (double pi : v.pis) {
        try {
          reports.push_back(check_convex_order(model->prior, model->family, pi, mm, nn,
                                               default_t_grid(), measure_tol));
        } catch (const std::logic_error& e) {
          CheckReport r;
          r.check = "convex_order";
          r.pass = false;
          r.violation = NAN;
          r.tolerance = measure_tol;
          r.note = e.what();
          reports.push_back(r);
        }
      }
    }
  }
  if (wants("binomial-reduction")) {
    const double cost = require_cost(s);
    for (int n : v.trials) {
      if (n < 1) throw UsageError("--trials: binomial N must be at least 1");
      reports.push_back(check_binomial_reduction(n, model->prior, cost, s.grid_size, solver_tol, 0,
                                                 s.threads));
    }
  }

  bool failed = false;
  std::ostringstream lines;
  for (const CheckReport& r : reports) {
    const std::string line = io::to_json(r).dump();
    std::cout << line << '\n';
    lines << line << '\n';
    failed = failed || (r.asserted && !r.pass);
  }
  if (!c.out.empty()) {
    io::write_text(fs::path(c.out) / "reports.jsonl", lines.str());
    echo_config(sub, c.out);
  }
  return failed ? 1 : 0;
}

AlternativeRule parse_rule(const std::string& text) {
  const auto bad = [&] { return UsageError("--rule: expected policy, fixed:K or threshold:lo,hi,cap"); };
  if (text.rfind("fixed:", 0) == 0) {
    int k = -1;
    const std::string rest = text.substr(6);
    const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), k);
    if (ec != std::errc() || ptr != rest.data() + rest.size() || k < 0) throw bad();
    return AlternativeRule::fixed(k);
  }
  if (text.rfind("threshold:", 0) == 0) {
    std::stringstream ss(text.substr(10));
    double lo = 0.0, hi = 0.0;
    int cap = 0;
    char c1 = 0, c2 = 0;
    if (!(ss >> lo >> c1 >> hi >> c2 >> cap) || c1 != ',' || c2 != ',' || cap < 0 || !(lo < hi))
      throw bad();
    return AlternativeRule::threshold(lo, hi, cap);
  }
  throw bad();
}

int cmd_simulate(const CLI::App& sub, const ModelArgs& m, const SolveArgs& s,
                 const std::string& surface_path, const std::string& rule, int replicates,
                 bool trace, const Common& c) {
  if (replicates < 1) throw UsageError("--replicates: must be at least 1");
  const Loaded model = load_model(m);
  SimulationOptions options;
  options.replicates = replicates;
  options.seed = c.seed;
  options.threads = c.threads;
  options.keep_trace = trace;

  Json line{{"command", "simulate"}, {"rule", rule}};
  SimulationReport report;
  if (rule == "policy") {
    const ValueSurface surface = surface_path.empty() ? solve_from(model, s) : load_surface(surface_path);
    report = simulate_policy(surface, model.prior, model.family, options);
    line["value"] = surface.interpolate(0, model.prior.upper_mass());
  } else {
    report = simulate_alternative(parse_rule(rule), model.prior, model.family, require_cost(s), options);
  }
  line.update(io::to_json(report));
  if (!model.note.empty()) line["note"] = model.note;
  print_line(line);
  if (!c.out.empty()) {
    const fs::path dir = c.out;
    io::write_text(dir / "simulation.json", line.dump(2) + "\n");
    if (trace) io::write_trace_csv(dir / "trace.csv", report);
    echo_config(sub, dir);
  } else if (trace) {
    throw UsageError("--trace: needs --out");
  }
  return 0;
}

int cmd_oracle(const CLI::App& sub, const ModelArgs& m, const SolveArgs& s, double tol, const Common& c) {
  const Loaded model = load_model(m);
  const double cost = require_cost(s);
  const int horizon = resolve_horizon(s, cost);
  const double exact = brute_force_value(model.prior, model.family, cost, horizon);
  SolveOptions options = solve_options(s);
  options.pinned = reachable_pis(model.prior, model.family, horizon);
  const ValueSurface surface = solve(model.prior, model.family, cost, horizon, options);
  const double root = model.prior.upper_mass();
  const double grid_value = surface.interpolate(0, root);
  const double diff = std::abs(grid_value - exact);
  Json line{{"command", "oracle"}, {"root_pi", root},  {"oracle_value", exact},
            {"solver_value", grid_value}, {"difference", diff}, {"tolerance", tol},
            {"horizon", horizon},  {"pass", diff <= tol}};
  print_line(line);
  if (!c.out.empty()) {
    io::write_text(fs::path(c.out) / "oracle.json", line.dump(2) + "\n");
    echo_config(sub, c.out);
  }
  return diff <= tol ? 0 : 1;
}

int cmd_probe(const CLI::App& sub, const std::vector<std::string>& models, const ProbeOptions& options,
              const Common& c) {
  if (options.trials < 0) throw UsageError("--trials: must be non-negative");
  if (!(options.cost > 0.0)) throw UsageError("--cost: cost must be positive");
  for (const std::string& name : models) {
    try {
      make_named_family(name);
    } catch (const std::exception& e) {
      throw UsageError(std::string("--models: ") + e.what());
    }
  }
  ProbeOptions o = options;
  o.seed = c.seed;
  o.threads = c.threads;
  const auto trials = conjecture_probe(models, o);
  std::ostringstream lines;
  int findings = 0;
  for (const ProbeTrial& t : trials) {
    lines << io::to_json(t).dump() << '\n';
    findings += t.finding ? 1 : 0;
  }
  if (!c.out.empty()) {
    io::write_text(fs::path(c.out) / "probe.jsonl", lines.str());
    echo_config(sub, c.out);
  } else {
    std::cout << lines.str();
  }
  print_line({{"command", "probe"}, {"trials", o.trials}, {"findings", findings}, {"seed", o.seed}});
  return 0;
}

int cmd_plot_data(const CLI::App& sub, const std::string& surface_path, const Common& c) {
  const ValueSurface surface = load_surface(surface_path);
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  io::write_value_layers_csv(dir / "value_layers.csv", surface);
  io::write_boundaries_csv(dir / "boundaries.csv", surface);
  echo_config(sub, dir);
  return 0;
}

}  // namespace

std::vector<double> discretize_distribution(const std::string& text, int atoms) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--prior-dist: expected <law>:<p1>,<p2>");
  const std::string law = text.substr(0, colon);
  std::stringstream ss(text.substr(colon + 1));
  double p1 = 0.0, p2 = 0.0;
  char comma = 0;
  if (!(ss >> p1 >> comma >> p2) || comma != ',') throw UsageError("--prior-dist: expected two parameters");
  if (atoms < 1) throw UsageError("--prior-atoms: must be at least 1");

  const auto quantiles = [&](const auto& dist) {
    std::vector<double> out;
    for (int k = 0; k < atoms; ++k) out.push_back(boost::math::quantile(dist, (k + 0.5) / atoms));
    return out;
  };
  try {
    if (law == "normal") return quantiles(boost::math::normal_distribution<double>(p1, p2));
    if (law == "lognormal") return quantiles(boost::math::lognormal_distribution<double>(p1, p2));
    if (law == "uniform") return quantiles(boost::math::uniform_distribution<double>(p1, p2));
    if (law == "beta") return quantiles(boost::math::beta_distribution<double>(p1, p2));
    if (law == "gamma") return quantiles(boost::math::gamma_distribution<double>(p1, p2));
  } catch (const std::exception& e) {
    throw UsageError(std::string("--prior-dist: ") + e.what());
  }
  throw UsageError("--prior-dist: unknown law '" + law + "'");
}

int run(int argc, char** argv) {
  CLI::App app{"Bayesian sequential testing of H0: Theta <= theta0 against H1: Theta > theta0"};
  app.name("seqtest");
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON run configuration; command-line flags take precedence");
  app.require_subcommand(1, 1);
  app.fallthrough();

  ModelArgs model;
  SolveArgs solve_args;
  VerifyArgs verify_args;
  Common common;
  std::string surface_path;
  std::string rule = "policy";
  int replicates = 100000;
  bool trace = false;
  double oracle_tol = 1e-9;
  std::vector<std::string> probe_models = bundled_model_names();
  ProbeOptions probe;

  const auto add_common = [&](CLI::App* sub, bool seeded) {
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--threads", common.threads, "worker threads")->capture_default_str();
    if (seeded) sub->add_option("--seed", common.seed, "master seed")->capture_default_str();
  };

  auto* solve_cmd = app.add_subcommand("solve", "solve the truncated problem on a pi-grid");
  add_model_options(solve_cmd, model);
  add_solve_options(solve_cmd, solve_args);
  add_common(solve_cmd, false);

  auto* bound_cmd = app.add_subcommand("boundaries", "print stopping boundaries of a solved surface");
  bound_cmd->add_option("--surface", surface_path, "surface.json")->required();
  add_common(bound_cmd, false);

  auto* verify_cmd = app.add_subcommand("verify", "run structural checks");
  add_model_options(verify_cmd, model);
  add_solve_options(verify_cmd, solve_args);
  add_common(verify_cmd, false);
  verify_cmd->add_option("--check", verify_args.checks,
                         "concavity, time-monotonicity, concentration, level-spread, convex-order, "
                         "binomial-reduction or all")
      ->delimiter(',');
  verify_cmd->add_option("--surface", verify_args.surface, "use a solved surface for surface checks");
  verify_cmd->add_option("--tol", verify_args.tol, "tolerance override");
  verify_cmd->add_option("--pi", verify_args.pis, "pi values for measure checks")->delimiter(',');
  verify_cmd->add_option("--a", verify_args.a, "concentration: lower cut a < theta0");
  verify_cmd->add_option("--b", verify_args.b, "concentration: upper cut b > theta0");
  verify_cmd->add_option("--pi1", verify_args.pi1, "level spread: lower level")->capture_default_str();
  verify_cmd->add_option("--pi2", verify_args.pi2, "level spread: upper level")->capture_default_str();
  verify_cmd->add_option("--n-max", verify_args.n_max, "last time index for level-curve checks")
      ->capture_default_str();
  verify_cmd->add_option("--pairs", verify_args.pairs, "convex order: m:n pairs")->delimiter(',');
  verify_cmd->add_option("--trials", verify_args.trials, "binomial reduction: values of N")->delimiter(',');
  verify_cmd->add_option("--burn", verify_args.burn, "time monotonicity: terminal layers skipped")
      ->capture_default_str();

  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo evaluation of a stopping rule");
  add_model_options(sim_cmd, model);
  add_solve_options(sim_cmd, solve_args);
  add_common(sim_cmd, true);
  sim_cmd->add_option("--surface", surface_path, "solved surface for the policy rule");
  sim_cmd->add_option("--rule", rule, "policy, fixed:K or threshold:lo,hi,cap")->capture_default_str();
  sim_cmd->add_option("--replicates", replicates, "number of replicates")->capture_default_str();
  sim_cmd->add_flag("--trace", trace, "write trace.csv with one row per replicate");

  auto* oracle_cmd = app.add_subcommand("oracle", "compare the grid solver with the exact outcome tree");
  add_model_options(oracle_cmd, model);
  add_solve_options(oracle_cmd, solve_args);
  add_common(oracle_cmd, false);
  oracle_cmd->add_option("--tol", oracle_tol, "allowed difference")->capture_default_str();

  auto* probe_cmd = app.add_subcommand("probe", "time monotonicity on random priors");
  add_common(probe_cmd, true);
  probe_cmd->add_option("--models", probe_models, "model names")->delimiter(',');
  probe_cmd->add_option("--trials", probe.trials, "random priors")->capture_default_str();
  probe_cmd->add_option("--cost", probe.cost, "cost per observation")->capture_default_str();
  probe_cmd->add_option("--grid-size", probe.grid_size, "pi-grid points")->capture_default_str();
  probe_cmd->add_option("--slack", probe.slack, "horizon slack")->capture_default_str();
  probe_cmd->add_option("--tol", probe.tol, "finding threshold")->capture_default_str();

  auto* plot_cmd = app.add_subcommand("plot-data", "write value_layers.csv and boundaries.csv");
  plot_cmd->add_option("--surface", surface_path, "surface.json")->required();
  add_common(plot_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  solve_args.threads = common.threads;
  try {
    if (solve_cmd->parsed()) return cmd_solve(*solve_cmd, model, solve_args, common);
    if (bound_cmd->parsed()) return cmd_boundaries(*bound_cmd, surface_path, common);
    if (verify_cmd->parsed()) return cmd_verify(*verify_cmd, model, solve_args, verify_args, common);
    if (sim_cmd->parsed())
      return cmd_simulate(*sim_cmd, model, solve_args, surface_path, rule, replicates, trace, common);
    if (oracle_cmd->parsed()) return cmd_oracle(*oracle_cmd, model, solve_args, oracle_tol, common);
    if (probe_cmd->parsed()) return cmd_probe(*probe_cmd, probe_models, probe, common);
    if (plot_cmd->parsed()) return cmd_plot_data(*plot_cmd, surface_path, common);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << msg << '\n';
    return 2;
  }
  return 2;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage{"seqtest"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : storage) argv.push_back(s.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace seqtest::cli
