#pragma once

#include "epifield/data.hpp"
#include "epifield/epimodel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>

namespace epifield {

/// Error-model and spatial-coefficient parameters shared by all regions.
struct GlobalParams {
  double sigma_a = 0; // additive noise, per-capita units
  double sigma_m = 0; // multiplicative noise
  double tau2 = 1;    // GMRF variance scale
  double lambda = 0;  // spatial dependence, prior support [0, 0.9]
};

/// Proper-CAR precision P = (diag(g) - lambda W) / tau2 and its inverse.
/// Immutable after construction.
class SpatialKernel {
public:
  const Eigen::MatrixXd& precision() const noexcept { return P_; }
  const Eigen::MatrixXd& covariance() const noexcept { return P_inv_; }
  const Eigen::LLT<Eigen::MatrixXd>& factor() const noexcept { return llt_; }
  Eigen::Index size() const noexcept { return P_.rows(); }

private:
  friend SpatialKernel precision_matrix(double, double, const Adjacency&);
  Eigen::MatrixXd P_;
  Eigen::MatrixXd P_inv_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Throws NumericalError when P is not positive definite.
SpatialKernel precision_matrix(double tau2, double lambda, const Adjacency& adj);

/// Sigma = P^{-1} + diag((sigma_a + sigma_m * y_pred)^2).
Eigen::MatrixXd observation_covariance(const SpatialKernel& kernel, double sigma_a, double sigma_m,
                                       std::span<const double> y_pred);

enum class MoranWeighting { binary, binary_modified, row_standardised };
enum class MoranNull { automatic, analytic, permutation };

struct MoranOptions {
  MoranNull null = MoranNull::automatic; // automatic: permutation below 10 units
  int permutations = 10000;
  std::uint64_t seed = 20240601;
};

struct MoranResult {
  double I = 0;
  double expected = 0; // mean of I under the null
  double variance = 0; // variance of I under the null
  double z = 0;
  bool permutation = false;
};

/// Moran's I with the chosen weighting. `binary_modified` divides each binary
/// weight by the seat-to-seat distance and so needs `distances`.
MoranResult morans_i(std::span<const double> values, const Adjacency& adj, MoranWeighting weighting,
                     const std::optional<Eigen::MatrixXd>& distances = std::nullopt,
                     const MoranOptions& options = {});

Eigen::MatrixXd moran_weights(const Adjacency& adj, MoranWeighting weighting,
                              const std::optional<Eigen::MatrixXd>& distances);

const char* to_string(MoranWeighting w);

} // namespace epifield
