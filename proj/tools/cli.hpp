#pragma once

#include <string>
#include <vector>

namespace dsac::cli {

/// Runs the full command line (without argv[0]); returns the process exit
/// code. 0 = success, 2 = configuration/usage error, 3 = numerical abort.
int run(const std::vector<std::string>& args);

/// Expands a --seeds argument: a plain integer N means N consecutive seeds
/// starting at base_seed; a comma list is taken verbatim.
std::vector<std::uint64_t> expand_seeds(const std::string& text, std::uint64_t base_seed);

std::string metrics_basename(const std::string& variant, std::uint64_t seed);
std::string checkpoint_basename(const std::string& variant, std::uint64_t seed);

}  // namespace dsac::cli
