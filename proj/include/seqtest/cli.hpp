#pragma once

#include <string>
#include <vector>

#include "seqtest/prior.hpp"

namespace seqtest::cli {

/// Entry point. Exit codes: 0 success, 1 an asserted check failed,
/// 2 usage or configuration error (one diagnostic line on stderr).
int run(int argc, char** argv);
/// Same, with args excluding the program name.
int run(const std::vector<std::string>& args);

/// Equal-mass discretization of a continuous law at quantile midpoints
/// (k + 1/2) / atoms. text is "<law>:<p1>,<p2>" with law one of normal,
/// lognormal, uniform, beta, gamma (shape, scale).
std::vector<double> discretize_distribution(const std::string& text, int atoms);

}  // namespace seqtest::cli
