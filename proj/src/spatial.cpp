#include "epifield/spatial.hpp"

#include "epifield/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace epifield {

SpatialKernel precision_matrix(double tau2, double lambda, const Adjacency& adj) {
  if (!(tau2 > 0)) throw InvalidInput("precision_matrix: tau2 must be positive");
  if (!(lambda >= 0 && lambda < 1)) throw InvalidInput("precision_matrix: lambda must be in [0, 1)");
  adj.validate();
  SpatialKernel k;
  k.P_ = (Eigen::MatrixXd(adj.g.asDiagonal()) - lambda * adj.W) / tau2;
  k.llt_.compute(k.P_);
  if (k.llt_.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "precision matrix not positive definite (tau2=" << tau2 << ", lambda=" << lambda
        << ", min g=" << adj.g.minCoeff() << ")";
    throw NumericalError(msg.str());
  }
  k.P_inv_ = k.llt_.solve(Eigen::MatrixXd::Identity(k.P_.rows(), k.P_.cols()));
  k.P_inv_ = 0.5 * (k.P_inv_ + k.P_inv_.transpose()).eval();
  return k;
}

Eigen::MatrixXd observation_covariance(const SpatialKernel& kernel, double sigma_a, double sigma_m,
                                       std::span<const double> y_pred) {
  if (static_cast<Eigen::Index>(y_pred.size()) != kernel.size())
    throw InvalidInput("observation_covariance: prediction length does not match kernel");
  Eigen::MatrixXd S = kernel.covariance();
  for (Eigen::Index j = 0; j < S.rows(); ++j) {
    const double sd = sigma_a + sigma_m * y_pred[j];
    S(j, j) += sd * sd;
  }
  return S;
}

const char* to_string(MoranWeighting w) {
  switch (w) {
  case MoranWeighting::binary: return "binary";
  case MoranWeighting::binary_modified: return "binary_modified";
  case MoranWeighting::row_standardised: return "row_standardised";
  }
  return "?";
}

Eigen::MatrixXd moran_weights(const Adjacency& adj, MoranWeighting weighting,
                              const std::optional<Eigen::MatrixXd>& distances) {
  Eigen::MatrixXd W = adj.W;
  switch (weighting) {
  case MoranWeighting::binary: break;
  case MoranWeighting::binary_modified:
    if (!distances) throw InvalidInput("binary_modified weighting requires seat distances");
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j)
        if (W(i, j) != 0) {
          const double d = (*distances)(i, j);
          if (!(d > 0))
            throw InvalidInput("missing distance between " + adj.region_ids[i] + " and " +
                               adj.region_ids[j]);
          W(i, j) /= d;
        }
    break;
  case MoranWeighting::row_standardised:
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      const double s = W.row(i).sum();
      if (s > 0) W.row(i) /= s;
    }
    break;
  }
  return W;
}

namespace {

double moran_statistic(const Eigen::VectorXd& z, const Eigen::MatrixXd& W, double S0) {
  const double n = static_cast<double>(z.size());
  return n / S0 * z.dot(W * z) / z.squaredNorm();
}

} // namespace

MoranResult morans_i(std::span<const double> values, const Adjacency& adj, MoranWeighting weighting,
                     const std::optional<Eigen::MatrixXd>& distances, const MoranOptions& options) {
  const auto n = static_cast<Eigen::Index>(values.size());
  if (n != static_cast<Eigen::Index>(adj.size()))
    throw InvalidInput("morans_i: value count does not match adjacency");
  if (n < 3) throw InvalidInput("morans_i: need at least 3 areal units");
  const Eigen::MatrixXd W = moran_weights(adj, weighting, distances);

  Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(values.data(), n);
  z.array() -= z.mean();
  const double m2 = z.squaredNorm();
  if (!(m2 > 1e-300 * n) || z.cwiseAbs().maxCoeff() == 0)
    throw InvalidInput("morans_i: values have zero variance, statistic undefined");

  const double S0 = W.sum();
  MoranResult r;
  r.I = moran_statistic(z, W, S0);

  const bool use_perm = options.null == MoranNull::permutation ||
                        (options.null == MoranNull::automatic && n < 10) || n < 4;
  if (!use_perm) {
    // Moments under the randomisation (permutation) null.
    const double dn = static_cast<double>(n);
    const double S1 = 0.5 * (W + W.transpose()).array().square().sum();
    const double S2 = (W.rowwise().sum() + W.colwise().sum().transpose()).array().square().sum();
    const double b2 = dn * z.array().pow(4).sum() / (m2 * m2);
    r.expected = -1.0 / (dn - 1);
    const double EI2 =
        (dn * ((dn * dn - 3 * dn + 3) * S1 - dn * S2 + 3 * S0 * S0) -
         b2 * ((dn * dn - dn) * S1 - 2 * dn * S2 + 6 * S0 * S0)) /
        ((dn - 1) * (dn - 2) * (dn - 3) * S0 * S0);
    r.variance = EI2 - r.expected * r.expected;
  } else {
    r.permutation = true;
    Rng rng(options.seed);
    Eigen::VectorXd perm = z;
    double sum = 0, sum2 = 0;
    for (int p = 0; p < options.permutations; ++p) {
      std::shuffle(perm.data(), perm.data() + n, rng);
      const double I = moran_statistic(perm, W, S0);
      sum += I;
      sum2 += I * I;
    }
    const double np = options.permutations;
    r.expected = sum / np;
    r.variance = (sum2 - np * r.expected * r.expected) / (np - 1);
  }
  if (!(r.variance > 0)) throw InvalidInput("morans_i: null variance is zero");
  r.z = (r.I - r.expected) / std::sqrt(r.variance);
  return r;
}

} // namespace epifield
