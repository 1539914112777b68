#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "seqtest/simulator.hpp"
#include "seqtest/verifier.hpp"

namespace seqtest::io {

using Json = nlohmann::ordered_json;

/// Shortest text that reads back to the same double (at most 17 digits).
std::string format_double(double x);

/// Prior CSV: a `# theta0=<value>` line, then header `u,w`, then one atom per row.
/// Errors are std::invalid_argument naming the offending line and field.
Prior read_prior_csv(const std::filesystem::path& path);
void write_prior_csv(const std::filesystem::path& path, const Prior& prior);

/// Finite family from a CSV with header `x,h` (h strictly positive).
NaturalFamily read_family_csv(const std::filesystem::path& path);

Json to_json(const ValueSurface& surface);
ValueSurface surface_from_json(const Json& j);
void write_surface_json(const std::filesystem::path& path, const ValueSurface& surface);
ValueSurface read_surface_json(const std::filesystem::path& path);

/// `n,b1,b2`, one row per layer.
void write_boundaries_csv(const std::filesystem::path& path, const ValueSurface& surface);
/// Returns the surface's boundary arrays from a boundaries CSV (other fields empty).
std::pair<std::vector<double>, std::vector<double>> read_boundaries_csv(
    const std::filesystem::path& path);

/// `n,pi,V`, (horizon + 1) * grid_size rows.
void write_value_layers_csv(const std::filesystem::path& path, const ValueSurface& surface);

Json to_json(const CheckReport& report);
Json to_json(const SimulationReport& report);
Json to_json(const ProbeTrial& trial);

/// `replicate,theta,tau,decision,loss`.
void write_trace_csv(const std::filesystem::path& path, const SimulationReport& report);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace seqtest::io
