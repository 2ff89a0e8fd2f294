#pragma once

#include "epifield/amcmc.hpp"
#include "epifield/params.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace epifield {

/// Sample distance correlation of the rows of X (n x p) and Y (n x q).
/// Returns NaN when either sample has zero distance variance.
/// Throws InvalidInput for n < 10, mismatched rows or non-finite entries.
double dcor(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

struct DcorMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd values; // NaN rows/cols for degenerate labels
  std::vector<std::string> degenerate;

  /// Entries rounded to one decimal, NaN kept.
  Eigen::MatrixXd rounded() const;
  /// Label header row and column; `decimals` < 0 writes full precision.
  void write_csv(const std::filesystem::path& path, int decimals = -1) const;
};

enum class DcorGrouping {
  individual,   // one column per parameter
  by_component, // per region, ErrM = (sigma_a, sigma_m), SpC = (tau2, lambda)
};

struct DcorTableOptions {
  DcorGrouping grouping = DcorGrouping::individual;
  std::size_t max_rows = 5000;
  std::uint64_t seed = 7;
};

/// Pairwise dcor over the chain's parameters on their natural scale (noise and
/// spatial scale exponentiated). Rows beyond `max_rows` are subsampled without
/// replacement. Degenerate (constant) columns are reported and left out of
/// their group.
DcorMatrix dcor_table(const Chain& chain, const ParamLayout& layout, const DcorTableOptions& options = {});

} // namespace epifield
