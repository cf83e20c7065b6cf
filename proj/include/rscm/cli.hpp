#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rscm/matrixkit.hpp"
#include "rscm/shrinkage.hpp"
#include "rscm/sim.hpp"

namespace rscm::cli {

/// Options shared by every subcommand.
struct RunConfig {
  std::string subcommand;
  std::vector<std::string> inputs;
  std::vector<std::string> estimators;
  std::uint64_t seed = kDefaultSeed;
  std::string output;  // empty: standard output
  bool raw = false;
  unsigned threads = 1;
};

/// Runs one command line (without the program name). Returns the exit code;
/// failures print a single "error kind=<kind> message=..." line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "a" or "a:b:step" (inclusive).
std::vector<Index> parse_index_range(const std::string& text);
std::vector<double> parse_real_range(const std::string& text);

/// "gaussian" or "t:<nu>".
Family parse_family(const std::string& text);

/// Comma-separated "<eigenvalue>x<count>" terms. The count is an integer,
/// "m" (the grid value `m`) or "rest" (p minus the other counts).
std::vector<std::pair<double, Index>> parse_spectrum(const std::string& text,
                                                     std::optional<Index> p,
                                                     std::optional<Index> m);

/// Shrinkage rule name; "scm" maps to nullopt (plain sample covariance).
std::optional<Method> parse_estimator(const std::string& name);

/// key=value lines; blank lines and lines starting with '#' are skipped.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

}  // namespace rscm::cli
