#include "epifield/epimodel.hpp"

#include "epifield/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace epifield {

double IncubationHyper::mu_quantile(double p) const {
  return mu_center + mu_scale * boost::math::quantile(boost::math::students_t(mu_df), p);
}

double IncubationHyper::sigma_quantile(double p) const {
  return sigma_scale * std::sqrt(boost::math::quantile(boost::math::chi_squared(sigma_df), p) / sigma_df);
}

double infection_rate_pdf(double t, double k, double theta) {
  if (t < 0) throw std::domain_error("infection_rate_pdf: t < 0");
  if (!(k > 0) || !(theta > 0)) throw std::domain_error("infection_rate_pdf: k and theta must be positive");
  if (t == 0) {
    if (k == 1) return 1.0 / theta;
    return k < 1 ? INFINITY : 0.0;
  }
  return std::exp((k - 1) * std::log(t) - t / theta - k * std::log(theta) - std::lgamma(k));
}

IncubationDraw sample_incubation(const IncubationHyper& hyper, Rng& rng) {
  std::student_t_distribution<double> t(hyper.mu_df);
  std::chi_squared_distribution<double> chi2(hyper.sigma_df);
  IncubationDraw d;
  d.mu = hyper.mu_center + hyper.mu_scale * t(rng);
  d.sigma = hyper.sigma_scale * std::sqrt(chi2(rng) / hyper.sigma_df);
  return d;
}

double incubation_cdf(double t, const IncubationDraw& draw) {
  if (t <= 0) return 0.0;
  return 0.5 * std::erfc(-(std::log(t) - draw.mu) / (draw.sigma * std::numbers::sqrt2));
}

double incubation_pdf(double t, const IncubationDraw& draw) {
  if (t <= 0) return 0.0;
  const double z = (std::log(t) - draw.mu) / draw.sigma;
  return std::exp(-0.5 * z * z) / (t * draw.sigma * std::sqrt(2 * std::numbers::pi));
}

void predict_daily(const RegionParams& params, const IncubationDraw& draw, double first_day,
                   std::span<double> out) {
  if (!params.valid()) throw InvalidInput("predict_daily: invalid region parameters");
  const std::size_t n = out.size();
  const double lead = first_day - params.t0; // elapsed time at out[0]
  // First index with t_i > t0.
  std::size_t first = 0;
  if (lead <= 0) first = static_cast<std::size_t>(std::floor(-lead)) + 1;
  for (std::size_t i = 0; i < std::min(first, n); ++i) out[i] = 0;
  if (first >= n) return;

  const double elapsed0 = lead + static_cast<double>(first);
  const double frac = elapsed0 - std::floor(elapsed0);
  const auto cells0 = static_cast<std::size_t>(std::floor(elapsed0));
  const std::size_t max_cells = cells0 + (n - first - 1);

  // f_inf at full-cell midpoints and f_inc at the matching lags; both shared by every day.
  thread_local std::vector<double> finf, finc;
  finf.resize(max_cells);
  finc.resize(max_cells);
  const double log_norm = -params.k * std::log(params.theta) - std::lgamma(params.k);
  for (std::size_t j = 0; j < max_cells; ++j) {
    const double u = static_cast<double>(j) + 0.5;
    finf[j] = std::exp((params.k - 1) * std::log(u) - u / params.theta + log_norm);
    finc[j] = incubation_pdf(frac + 0.5 + static_cast<double>(j), draw);
  }
  const double tail_inc = incubation_pdf(0.5 * frac, draw);

  for (std::size_t i = first; i < n; ++i) {
    const std::size_t cells = cells0 + (i - first);
    double acc = 0;
    for (std::size_t j = 0; j < cells; ++j) acc += finf[j] * finc[cells - 1 - j];
    if (frac > 0) {
      const double u = static_cast<double>(cells) + 0.5 * frac;
      acc += frac * std::exp((params.k - 1) * std::log(u) - u / params.theta + log_norm) * tail_inc;
    }
    out[i] = params.N * acc;
  }
}

std::vector<double> predict_daily(const RegionParams& params, const IncubationDraw& draw,
                                  std::span<const double> grid) {
  std::vector<double> out(grid.size());
  if (grid.empty()) return out;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (std::abs(grid[i] - grid[i - 1] - 1.0) > 1e-9)
      throw InvalidInput("predict_daily: grid must have unit daily spacing");
  predict_daily(params, draw, grid.front(), out);
  return out;
}

std::vector<double> infection_rate_daily(const RegionParams& params, std::span<const double> grid) {
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i] - params.t0;
    if (t > 0) out[i] = params.N * infection_rate_pdf(t, params.k, params.theta);
  }
  return out;
}

double forecast_cutoff(double mu_hi, double sigma_hi) { return std::exp(mu_hi + 2 * sigma_hi); }

double forecast_cutoff(const IncubationHyper& hyper) {
  return forecast_cutoff(hyper.mu_quantile(0.975), hyper.sigma_quantile(0.975));
}

} // namespace epifield
