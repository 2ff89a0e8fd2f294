#pragma once

#include "epifield/epimodel.hpp"
#include "epifield/spatial.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace epifield {

/// Coordinate layout of the sampled vector:
///   [t0, k, theta, N] per region, log sigma_a, log sigma_m, then
///   log tau2 and lambda when the spatial block is active.
struct ParamLayout {
  std::vector<std::string> region_ids;
  bool spatial = true;

  std::size_t n_regions() const noexcept { return region_ids.size(); }
  std::size_t dim() const noexcept { return 4 * n_regions() + 2 + (spatial ? 2 : 0); }
  std::size_t log_sigma_a_index() const noexcept { return 4 * n_regions(); }
  std::size_t log_sigma_m_index() const noexcept { return 4 * n_regions() + 1; }
  std::size_t log_tau2_index() const noexcept { return 4 * n_regions() + 2; }
  std::size_t lambda_index() const noexcept { return 4 * n_regions() + 3; }

  /// "bernalillo.t0", ..., "log_sigma_a", "log_sigma_m", "log_tau2", "lambda".
  std::vector<std::string> names() const;
};

/// Parameters in sampling coordinates. Noise and spatial scale are held on
/// log scale so packing and unpacking are exact copies.
struct ParamVector {
  std::vector<RegionParams> regions;
  double log_sigma_a = -10;
  double log_sigma_m = -3;
  double log_tau2 = -20;
  double lambda = 0.5;

  GlobalParams global() const;

  Eigen::VectorXd pack(const ParamLayout& layout) const;
  static ParamVector unpack(const ParamLayout& layout, const Eigen::VectorXd& coords);

  bool operator==(const ParamVector&) const = default;
};

} // namespace epifield
