#include "epifield/forecast.hpp"

#include "epifield/errors.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace epifield {

void ForecastBand::validate() const {
  const std::size_t n = dates.size();
  if (median.size() != n || q05.size() != n || q25.size() != n || q75.size() != n || q95.size() != n)
    throw InvalidInput("forecast band: series lengths differ");
  for (std::size_t i = 0; i < n; ++i)
    if (!(q05[i] <= q25[i] && q25[i] <= median[i] && median[i] <= q75[i] && q75[i] <= q95[i]))
      throw InvalidInput("forecast band: quantiles not nested on " + format_date(dates[i]));
}

double quantile(std::vector<double>& values, double p) {
  if (values.empty()) throw InvalidInput("quantile of an empty sample");
  if (!(p >= 0 && p <= 1)) throw InvalidInput("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double crps(std::span<const double> samples, double y) {
  if (samples.empty()) throw InvalidInput("crps needs at least one sample");
  const auto n = static_cast<double>(samples.size());
  double a = 0, b = 0;
  for (double x : samples) a += std::abs(x - y);
  for (double x : samples)
    for (double z : samples) b += std::abs(x - z);
  return a / n - 0.5 * b / (n * n);
}

double average_crps(const ForecastBand& band, std::span<const double> observed) {
  if (observed.size() != band.n_calibration_days)
    throw InvalidInput("average_crps: observations do not cover the calibration window");
  if (band.n_calibration_days == 0) throw InvalidInput("average_crps: empty calibration window");
  std::vector<double> col(band.n_draws());
  double total = 0;
  for (std::size_t d = 0; d < band.n_calibration_days; ++d) {
    for (std::size_t s = 0; s < col.size(); ++s)
      col[s] = band.samples(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(d));
    total += crps(col, observed[d]);
  }
  return total / static_cast<double>(band.n_calibration_days);
}

std::vector<ForecastBand> posterior_predictive(const Chain& chain, const Posterior& posterior,
                                               Day calibration_start, const PredictiveOptions& options) {
  if (options.horizon < 0) throw InvalidInput("forecast horizon must be non-negative");
  if (options.horizon > StudyWindow::max_horizon)
    throw InvalidInput("forecast horizon " + std::to_string(options.horizon) + " exceeds " +
                       std::to_string(StudyWindow::max_horizon) +
                       " days: infections more recent than the long-tail incubation time (about "
                       "16 days) are not yet visible in the counts, so the data carry no "
                       "information about them");
  if (chain.n_kept() == 0) throw InvalidInput("posterior_predictive: empty chain");
  if (options.n_draws == 0) throw InvalidInput("posterior_predictive: n_draws must be positive");
  const auto& layout = posterior.layout();
  const auto& data = posterior.data();
  if (chain.dim() != layout.dim()) throw InvalidInput("posterior_predictive: chain does not match the model layout");

  const std::size_t R = data.n_regions();
  const std::size_t n_cal = data.n_days();
  const std::size_t n_days = n_cal + static_cast<std::size_t>(options.horizon);
  const auto D = static_cast<Eigen::Index>(options.n_draws);
  const bool noisy = options.include_noise && options.quantity == PredictiveQuantity::cases;

  std::vector<Eigen::MatrixXd> draws(R, Eigen::MatrixXd(D, static_cast<Eigen::Index>(n_days)));
  std::vector<double> grid(n_days);
  for (std::size_t i = 0; i < n_days; ++i) grid[i] = data.first_day + static_cast<double>(i);

  std::uniform_int_distribution<std::size_t> pick(0, chain.n_kept() - 1);
  std::normal_distribution<double> normal;
  for (Eigen::Index d = 0; d < D; ++d) {
    std::seed_seq seq{options.seed, static_cast<std::uint64_t>(d)};
    Rng rng(seq);
    const Eigen::VectorXd x = chain.samples.row(static_cast<Eigen::Index>(pick(rng))).transpose();
    const ParamVector p = ParamVector::unpack(layout, x);
    const IncubationDraw inc = options.pinned_incubation ? *options.pinned_incubation
                                                         : sample_incubation(posterior.options().hyper, rng);
    Eigen::MatrixXd pred(static_cast<Eigen::Index>(n_days), static_cast<Eigen::Index>(R));
    if (options.quantity == PredictiveQuantity::infections) {
      for (std::size_t r = 0; r < R; ++r) {
        const auto v = infection_rate_daily(p.regions[r], grid);
        for (std::size_t i = 0; i < n_days; ++i) pred(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) = v[i];
      }
    } else {
      pred = predict_normalized(p, data, inc, n_days);
      if (noisy) {
        const GlobalParams gp = p.global();
        std::optional<SpatialKernel> kernel;
        if (layout.spatial && R > 1) kernel.emplace(precision_matrix(gp.tau2, gp.lambda, *data.adjacency));
        const double extra = layout.spatial && R == 1 ? gp.tau2 : 0.0;
        Eigen::MatrixXd S(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(R));
        Eigen::VectorXd z(static_cast<Eigen::Index>(R));
        for (std::size_t i = 0; i < n_days; ++i) {
          const auto row = static_cast<Eigen::Index>(i);
          if (kernel) S = kernel->covariance();
          else S.setZero();
          for (std::size_t r = 0; r < R; ++r) {
            const auto c = static_cast<Eigen::Index>(r);
            const double sd = gp.sigma_a + gp.sigma_m * pred(row, c);
            S(c, c) += sd * sd + extra;
          }
          for (auto& v : z) v = normal(rng);
          if (S.isZero(0.0)) continue;
          Eigen::LLT<Eigen::MatrixXd> llt(S);
          if (llt.info() != Eigen::Success) throw NumericalError("predictive covariance not positive definite");
          pred.row(row) += (llt.matrixL() * z).transpose();
        }
      }
      for (std::size_t r = 0; r < R; ++r)
        pred.col(static_cast<Eigen::Index>(r)) *= static_cast<double>(data.populations[r]);
      if (noisy) pred = pred.cwiseMax(0.0);
    }
    for (std::size_t r = 0; r < R; ++r) draws[r].row(d) = pred.col(static_cast<Eigen::Index>(r)).transpose();
  }

  std::vector<ForecastBand> out(R);
  std::vector<double> col(options.n_draws);
  for (std::size_t r = 0; r < R; ++r) {
    auto& b = out[r];
    b.region_id = data.region_ids[r];
    b.n_calibration_days = n_cal;
    b.samples = std::move(draws[r]);
    for (std::size_t i = 0; i < n_days; ++i) {
      b.dates.push_back(add_days(calibration_start, static_cast<long>(i)));
      const auto c = static_cast<Eigen::Index>(i);
      for (Eigen::Index s = 0; s < D; ++s) col[static_cast<std::size_t>(s)] = b.samples(s, c);
      b.q05.push_back(quantile(col, 0.05));
      b.q25.push_back(quantile(col, 0.25));
      b.median.push_back(quantile(col, 0.5));
      b.q75.push_back(quantile(col, 0.75));
      b.q95.push_back(quantile(col, 0.95));
    }
  }
  return out;
}

void write_bands(const std::filesystem::path& path, const std::vector<ForecastBand>& bands) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw NotFoundError("cannot write " + path.string());
  out << "date,region,median,q05,q25,q75,q95\n";
  char buf[256];
  for (const auto& b : bands)
    for (std::size_t i = 0; i < b.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", format_date(b.dates[i]).c_str(),
                    b.region_id.c_str(), b.median[i], b.q05[i], b.q25[i], b.q75[i], b.q95[i]);
      out << buf;
    }
}

} // namespace epifield
