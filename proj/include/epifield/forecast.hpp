#pragma once

#include "epifield/amcmc.hpp"
#include "epifield/dates.hpp"
#include "epifield/posterior.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace epifield {

/// Pointwise predictive quantiles for one region, over the calibration days
/// followed by the forecast horizon. Counts are persons per day.
struct ForecastBand {
  std::string region_id;
  std::vector<Day> dates;
  std::size_t n_calibration_days = 0;
  std::vector<double> median, q05, q25, q75, q95;
  Eigen::MatrixXd samples; // n_draws x dates.size()

  std::size_t size() const noexcept { return dates.size(); }
  std::size_t horizon() const noexcept { return dates.size() - n_calibration_days; }
  std::size_t n_draws() const noexcept { return static_cast<std::size_t>(samples.rows()); }
  /// Throws InvalidInput unless q05 <= q25 <= median <= q75 <= q95 everywhere.
  void validate() const;
};

enum class PredictiveQuantity {
  cases,      // symptomatic counts, optionally with observation noise
  infections, // latent infections per day, N f_inf(t - t0)
};

struct PredictiveOptions {
  std::size_t n_draws = 100;
  int horizon = 14;
  bool include_noise = true;
  PredictiveQuantity quantity = PredictiveQuantity::cases;
  std::uint64_t seed = 1;
  /// Use this incubation draw for every sample instead of the hyper-distribution.
  std::optional<IncubationDraw> pinned_incubation;
};

/// Draws parameter sets from the chain (with replacement), runs the model over
/// the calibration window plus `horizon` days, and optionally adds Gaussian
/// observation noise with the per-day block covariance. Noisy counts are
/// clipped at 0. Draw d uses its own generator seeded by (seed, d).
///
/// Throws InvalidInput for horizon > 14: past that, infections have not yet
/// reached symptom onset with enough probability to inform the forecast.
std::vector<ForecastBand> posterior_predictive(const Chain& chain, const Posterior& posterior,
                                               Day calibration_start, const PredictiveOptions& options);

/// Linear-interpolation sample quantile (Hyndman-Fan type 7). Sorts `values`.
double quantile(std::vector<double>& values, double p);

/// Empirical CRPS: mean |X_i - y| - mean_{i,j} |X_i - X_j| / 2.
double crps(std::span<const double> samples, double y);

/// Per-day CRPS averaged over the calibration days of the band.
double average_crps(const ForecastBand& band, std::span<const double> observed);

/// `date,region,median,q05,q25,q75,q95`
void write_bands(const std::filesystem::path& path, const std::vector<ForecastBand>& bands);

} // namespace epifield
