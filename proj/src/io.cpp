#include "seqtest/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace seqtest::io {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw std::invalid_argument(where + ": not a number: '" + text + "'");
  return value;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Reads `header` and the data rows of a two-column numeric CSV. Blank lines
// and lines starting with '#' after the header are ignored.
std::vector<std::pair<double, double>> read_pairs(std::istream& in, const std::string& file,
                                                  const std::string& col_a,
                                                  const std::string& col_b, int line_no) {
  std::string line;
  bool have_header = false;
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = split_csv(t);
    const std::string where = file + " line " + std::to_string(line_no);
    if (!have_header) {
      if (cells.size() != 2 || cells[0] != col_a || cells[1] != col_b)
        throw std::invalid_argument(where + ": expected header '" + col_a + "," + col_b + "'");
      have_header = true;
      continue;
    }
    if (cells.size() != 2) throw std::invalid_argument(where + ": expected 2 fields");
    rows.emplace_back(parse_double(cells[0], where + " field " + col_a),
                      parse_double(cells[1], where + " field " + col_b));
  }
  if (!have_header) throw std::invalid_argument(file + ": missing header '" + col_a + "," + col_b + "'");
  if (rows.empty()) throw std::invalid_argument(file + ": no data rows");
  return rows;
}

std::vector<double> doubles_of(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw std::invalid_argument(std::string("surface json: missing array '") + key + "'");
  return j.at(key).get<std::vector<double>>();
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

Prior read_prior_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string file = "prior file " + path.string();
  std::string line;
  int line_no = 0;
  double theta0 = NAN;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string key = "# theta0=";
    if (t.rfind(key, 0) != 0)
      throw std::invalid_argument(file + " line " + std::to_string(line_no) +
                                  ": expected '# theta0=<value>' metadata line");
    theta0 = parse_double(trim(t.substr(key.size())), file + " field theta0");
    break;
  }
  if (std::isnan(theta0)) throw std::invalid_argument(file + ": missing '# theta0=' line");
  const auto rows = read_pairs(in, file, "u", "w", line_no);
  std::vector<double> atoms, weights;
  for (const auto& [u, w] : rows) {
    atoms.push_back(u);
    weights.push_back(w);
  }
  try {
    return Prior(atoms, weights, theta0);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(file + ": " + e.what());
  }
}

void write_prior_csv(const std::filesystem::path& path, const Prior& prior) {
  auto out = open_out(path);
  out << "# theta0=" << format_double(prior.theta0()) << "\nu,w\n";
  for (std::size_t i = 0; i < prior.size(); ++i)
    out << format_double(prior.atoms()[i]) << ',' << format_double(std::exp(prior.log_weights()[i]))
        << '\n';
}

NaturalFamily read_family_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string file = "family file " + path.string();
  const auto rows = read_pairs(in, file, "x", "h", 0);
  std::vector<double> xs, hs;
  for (const auto& [x, h] : rows) {
    if (!(h > 0.0)) throw std::invalid_argument(file + " field h: base weights must be positive");
    xs.push_back(x);
    hs.push_back(h);
  }
  try {
    return NaturalFamily::finite(path.stem().string(), xs, hs);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(file + ": " + e.what());
  }
}

Json to_json(const ValueSurface& surface) {
  Json j;
  j["cost"] = surface.cost;
  j["horizon"] = surface.horizon;
  j["pi_grid"] = surface.pi_grid;
  j["values"] = surface.values;
  j["b1"] = surface.b1;
  j["b2"] = surface.b2;
  return j;
}

ValueSurface surface_from_json(const Json& j) {
  ValueSurface s;
  if (!j.contains("cost") || !j.contains("horizon"))
    throw std::invalid_argument("surface json: missing cost or horizon");
  s.cost = j.at("cost").get<double>();
  s.horizon = j.at("horizon").get<int>();
  s.pi_grid = doubles_of(j, "pi_grid");
  s.values = doubles_of(j, "values");
  s.b1 = doubles_of(j, "b1");
  s.b2 = doubles_of(j, "b2");
  const std::size_t layers = static_cast<std::size_t>(s.horizon) + 1;
  if (s.horizon < 1 || s.pi_grid.size() < 3 || s.values.size() != layers * s.pi_grid.size() ||
      s.b1.size() != layers || s.b2.size() != layers)
    throw std::invalid_argument("surface json: inconsistent array sizes");
  return s;
}

void write_surface_json(const std::filesystem::path& path, const ValueSurface& surface) {
  write_text(path, to_json(surface).dump() + "\n");
}

ValueSurface read_surface_json(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("surface json " + path.string() + ": " + e.what());
  }
  return surface_from_json(j);
}

void write_boundaries_csv(const std::filesystem::path& path, const ValueSurface& surface) {
  auto out = open_out(path);
  out << "n,b1,b2\n";
  for (int n = 0; n <= surface.horizon; ++n)
    out << n << ',' << format_double(surface.b1[n]) << ',' << format_double(surface.b2[n]) << '\n';
}

std::pair<std::vector<double>, std::vector<double>> read_boundaries_csv(
    const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "n,b1,b2")
    throw std::invalid_argument("boundaries file: expected header 'n,b1,b2'");
  std::vector<double> b1, b2;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(trim(line));
    const std::string where = "boundaries file line " + std::to_string(line_no);
    if (cells.size() != 3) throw std::invalid_argument(where + ": expected 3 fields");
    if (parse_double(cells[0], where + " field n") != static_cast<double>(b1.size()))
      throw std::invalid_argument(where + " field n: rows out of order");
    b1.push_back(parse_double(cells[1], where + " field b1"));
    b2.push_back(parse_double(cells[2], where + " field b2"));
  }
  return {b1, b2};
}

void write_value_layers_csv(const std::filesystem::path& path, const ValueSurface& surface) {
  auto out = open_out(path);
  out << "n,pi,V\n";
  for (int n = 0; n <= surface.horizon; ++n)
    for (std::size_t j = 0; j < surface.grid_size(); ++j)
      out << n << ',' << format_double(surface.pi_grid[j]) << ',' << format_double(surface.at(n, j))
          << '\n';
}

Json to_json(const CheckReport& r) {
  Json j;
  j["check"] = r.check;
  j["instance"] = r.instance;
  j["violation"] = r.violation;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  j["asserted"] = r.asserted;
  if (r.n >= 0) j["location"] = {{"n", r.n}, {"pi", r.pi}, {"aux", r.aux}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

Json to_json(const SimulationReport& r) {
  Json j;
  j["replicates"] = r.replicates;
  j["cost"] = r.cost;
  j["mean_cost"] = r.mean_cost;
  j["std_error"] = r.std_error;
  j["mean_stopping_time"] = r.mean_stopping_time;
  j["error_rates"] = {{"accept_h1_given_h0", r.false_accept_h1},
                      {"accept_h0_given_h1", r.false_accept_h0}};
  j["capped"] = r.capped;
  j["seed"] = r.seed;
  return j;
}

Json to_json(const ProbeTrial& t) {
  Json j = to_json(t.report);
  j["finding"] = t.finding;
  j["reproduction"] = {{"trial", t.trial},       {"model", t.model},     {"trial_seed", t.trial_seed},
                       {"atoms", t.atoms},       {"weights", t.weights}, {"theta0", t.theta0},
                       {"horizon", t.horizon},   {"grid_size", t.grid_size}};
  return j;
}

void write_trace_csv(const std::filesystem::path& path, const SimulationReport& report) {
  auto out = open_out(path);
  out << "replicate,theta,tau,decision,loss\n";
  for (const ReplicateTrace& t : report.trace)
    out << t.replicate << ',' << format_double(t.theta) << ',' << t.tau << ',' << t.decision << ','
        << format_double(t.loss) << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace seqtest::io
