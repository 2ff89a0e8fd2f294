#pragma once

#include "epifield/data.hpp"
#include "epifield/epimodel.hpp"
#include "epifield/params.hpp"
#include "epifield/spatial.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace epifield {

/// Where the Gamma(shape, scale) prior on the GMRF scale is placed.
enum class SpatialScalePrior {
  neg_log_tau2, // Gamma on -log(tau2); matches the per-capita scale of the data
  tau,          // Gamma on tau itself, with the log(tau2) Jacobian
};

struct PriorSpec {
  double t0_mean = 0;
  double t0_sd = 10;
  double log_sigma_lo = -30;
  double log_sigma_hi = 10;
  double tau_shape = 10;
  double tau_scale = 2;
  SpatialScalePrior tau_prior = SpatialScalePrior::neg_log_tau2;
  double lambda_lo = 0;
  double lambda_hi = 0.9;
  double k_max = 50;
  double theta_max = 100;
  std::vector<double> N_max; // per region; 2 x population by default

  static PriorSpec for_populations(const std::vector<std::int64_t>& populations);
  void validate() const;
};

/// Observations aligned for the likelihood: one row per calibration day, one
/// column per region, in per-capita units.
struct CalibrationData {
  std::vector<std::string> region_ids;
  std::vector<std::int64_t> populations;
  Eigen::MatrixXd observed;
  double first_day = 0; // model time of row 0
  std::optional<Adjacency> adjacency;

  std::size_t n_regions() const noexcept { return region_ids.size(); }
  std::size_t n_days() const noexcept { return static_cast<std::size_t>(observed.rows()); }

  /// Builds from series sharing a common grid, cut to [from, to].
  static CalibrationData from_series(const std::vector<CaseSeries>& series, Day from, Day to,
                                     std::optional<Adjacency> adjacency);
};

struct LikelihoodOptions {
  /// Keep tau2 as an extra variance when there is a single region.
  bool single_region_spatial = false;
  /// Incubation draws averaged per likelihood estimate.
  int incubation_draws = 1;
  IncubationHyper hyper;
};

ParamLayout make_layout(const CalibrationData& data, const LikelihoodOptions& options);

/// Log prior density in sampling coordinates; -inf outside the support.
/// Uniform boxes contribute 0 inside their bounds.
double log_prior(const ParamVector& p, const PriorSpec& spec, bool spatial);
/// Spatial block included.
double log_prior(const ParamVector& p, const PriorSpec& spec);

/// Gaussian log likelihood for one incubation draw; -inf when a day's
/// covariance is not positive definite.
double log_likelihood(const ParamVector& p, const CalibrationData& data, const IncubationDraw& draw,
                      const LikelihoodOptions& options = {});

/// Per-day model predictions in per-capita units (n_days x n_regions).
Eigen::MatrixXd predict_normalized(const ParamVector& p, const CalibrationData& data,
                                   const IncubationDraw& draw, std::size_t n_days);

/// Prior x likelihood in sampling coordinates, with the pseudo-marginal
/// likelihood estimate drawn from the incubation hyper-distribution.
class Posterior {
public:
  Posterior(CalibrationData data, PriorSpec prior, LikelihoodOptions options);

  const ParamLayout& layout() const noexcept { return layout_; }
  const CalibrationData& data() const noexcept { return data_; }
  const PriorSpec& prior() const noexcept { return prior_; }
  const LikelihoodOptions& options() const noexcept { return options_; }

  double log_posterior(const Eigen::VectorXd& x, const IncubationDraw& draw) const;
  /// Unbiased-likelihood estimate: log mean over `incubation_draws` fresh draws.
  double log_posterior_estimate(const Eigen::VectorXd& x, Rng& rng) const;
  /// Same, with the incubation draw pinned.
  double log_posterior_pinned(const Eigen::VectorXd& x, const IncubationDraw& draw) const {
    return log_posterior(x, draw);
  }

  /// Coarse grid search per region with N solved by least squares; noise and
  /// spatial terms seeded from the residuals.
  ParamVector initial_point() const;
  /// Random-walk proposal scales used before adaptation starts.
  Eigen::VectorXd initial_proposal_sd(const ParamVector& p) const;

private:
  CalibrationData data_;
  PriorSpec prior_;
  LikelihoodOptions options_;
  ParamLayout layout_;
};

} // namespace epifield
