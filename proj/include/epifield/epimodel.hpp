#pragma once

#include <random>
#include <span>
#include <vector>

namespace epifield {

using Rng = std::mt19937_64;

/// Single-wave parameters for one areal unit. Times are in days relative to
/// the calibration origin (day 0 = first calibration day).
struct RegionParams {
  double t0 = 0;    // outbreak start
  double k = 1;     // Gamma shape
  double theta = 1; // Gamma scale, days
  double N = 1;     // eventual counted infections, persons

  bool valid() const noexcept { return k > 0 && theta > 0 && N > 0; }
  bool operator==(const RegionParams&) const = default;
};

/// Lognormal incubation parameters (log-days).
struct IncubationDraw {
  double mu = 1.62;
  double sigma = 0.418;
};

/// Hyper-distribution of the incubation parameters:
///   mu    = mu_center + mu_scale * T(mu_df)
///   sigma = sigma_scale * sqrt(X2(sigma_df) / sigma_df)
///
/// The defaults are solved by tools/calibrate_incubation so the central 95%
/// intervals are [1.48, 1.76] for mu and [0.320, 0.515] for sigma. Both
/// degrees of freedom are taken equal (one underlying sample size).
struct IncubationHyper {
  double mu_center = 1.62;
  double mu_scale = 0.06895491399494877;
  double mu_df = 34.90178961045253;
  double sigma_df = 34.90178961045253;
  double sigma_scale = 0.4175971407229093;

  double mu_quantile(double p) const;
  double sigma_quantile(double p) const;
  bool valid() const noexcept {
    return mu_scale > 0 && mu_df > 0 && sigma_df > 0 && sigma_scale > 0;
  }
};

/// Gamma(k, theta) density of the infection rate at t >= 0 days after onset.
/// Throws std::domain_error for t < 0.
double infection_rate_pdf(double t, double k, double theta);

IncubationDraw sample_incubation(const IncubationHyper& hyper, Rng& rng);

/// Lognormal CDF; 0 for t <= 0.
double incubation_cdf(double t, const IncubationDraw& draw);
/// Lognormal density; 0 for t <= 0.
double incubation_pdf(double t, const IncubationDraw& draw);

/// New symptomatic counts per day on a unit-spaced grid of days.
///
/// n_i = N * dt * integral_{t0}^{t_i} f_inf(tau - t0) f_inc(t_i - tau) dtau, with
/// the integral taken by the midpoint rule on one-day cells anchored at t0 (the
/// last, partial cell uses its own midpoint). Cost is O(n) density
/// evaluations plus an O(n^2) discrete convolution.
std::vector<double> predict_daily(const RegionParams& params, const IncubationDraw& draw,
                                  std::span<const double> grid);

/// Same, for the grid first_day, first_day + 1, ..., writing into `out`.
void predict_daily(const RegionParams& params, const IncubationDraw& draw, double first_day,
                   std::span<double> out);

/// Latent infections per day, N * f_inf(t_i - t0), zero before onset.
std::vector<double> infection_rate_daily(const RegionParams& params, std::span<const double> grid);

/// exp(mu_hi + 2 sigma_hi): a long-tail incubation time beyond which recent
/// infections are not yet visible in the counts.
double forecast_cutoff(double mu_hi, double sigma_hi);
/// Uses the upper 95% endpoints of the hyper-distribution.
double forecast_cutoff(const IncubationHyper& hyper);

} // namespace epifield
