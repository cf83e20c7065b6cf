#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rscm/applications.hpp"
#include "rscm/matrixkit.hpp"

namespace rscm {

/// "%.6g", or "%.17g" when `raw`.
std::string format_number(double value, bool raw = false);

/// Numeric CSV, one observation per row. A first line that does not parse
/// as numbers is taken as a header and skipped.
SampleSet read_samples_csv(std::istream& in);
SampleSet read_samples_csv(const std::filesystem::path& path);

struct ReturnsTable {
  std::vector<std::string> assets;
  /// T x p daily net returns.
  Matrix returns;
};

/// Header row of asset identifiers, then one row of decimal net returns per
/// day. A leading column named "date" is ignored. Missing values
/// (empty, NA, NaN) are rejected with their line number.
ReturnsTable read_returns_csv(std::istream& in);
ReturnsTable read_returns_csv(const std::filesystem::path& path);

/// Numeric features with the integer class label in the final column.
LabeledDataset read_labeled_csv(std::istream& in);
LabeledDataset read_labeled_csv(const std::filesystem::path& path);

void write_matrix_csv(std::ostream& out, const Matrix& m, bool raw = false);

}  // namespace rscm
