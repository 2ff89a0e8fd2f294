#include "epifield/posterior.hpp"

#include "epifield/errors.hpp"

#include <Eigen/Cholesky>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>

namespace epifield {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();
const double log_2pi = std::log(2 * std::numbers::pi);

double gamma_logpdf(double x, double shape, double scale) {
  if (!(x > 0)) return neg_inf;
  return (shape - 1) * std::log(x) - x / scale - shape * std::log(scale) - std::lgamma(shape);
}

void warn_non_spd(const char* what) {
  static std::atomic<int> count{0};
  const int c = count++;
  if (c < 5) spdlog::warn("log_likelihood: {} not positive definite; proposal rejected", what);
  else if (c == 5) spdlog::warn("log_likelihood: further positive-definiteness warnings suppressed");
}

} // namespace

PriorSpec PriorSpec::for_populations(const std::vector<std::int64_t>& populations) {
  PriorSpec s;
  for (auto p : populations) s.N_max.push_back(2.0 * static_cast<double>(p));
  return s;
}

void PriorSpec::validate() const {
  if (!(t0_sd > 0)) throw InvalidInput("prior: t0_sd must be positive");
  for (double v : {t0_mean, t0_sd, log_sigma_lo, log_sigma_hi, tau_shape, tau_scale, lambda_lo,
                   lambda_hi, k_max, theta_max})
    if (!std::isfinite(v)) throw InvalidInput("prior: bounds must be finite");
  if (!(log_sigma_lo < log_sigma_hi) || !(lambda_lo < lambda_hi))
    throw InvalidInput("prior: empty support interval");
}

CalibrationData CalibrationData::from_series(const std::vector<CaseSeries>& series, Day from, Day to,
                                             std::optional<Adjacency> adjacency) {
  if (series.empty()) throw InvalidInput("calibration needs at least one region");
  CalibrationData d;
  const auto n_days = static_cast<Eigen::Index>(days_between(from, to) + 1);
  d.observed.resize(n_days, static_cast<Eigen::Index>(series.size()));
  for (std::size_t r = 0; r < series.size(); ++r) {
    const auto cut = series[r].slice(from, to);
    const auto y = normalize(cut);
    for (Eigen::Index i = 0; i < n_days; ++i) d.observed(i, static_cast<Eigen::Index>(r)) = y[i];
    d.region_ids.push_back(series[r].region_id);
    d.populations.push_back(series[r].population);
  }
  if (series.size() > 1) {
    if (!adjacency) throw InvalidInput("joint calibration of several regions needs an adjacency");
    if (adjacency->region_ids != d.region_ids)
      throw InvalidInput("adjacency region order does not match the case series");
  }
  d.adjacency = std::move(adjacency);
  return d;
}

ParamLayout make_layout(const CalibrationData& data, const LikelihoodOptions& options) {
  return {data.region_ids, data.n_regions() > 1 || options.single_region_spatial};
}

double log_prior(const ParamVector& p, const PriorSpec& spec, bool spatial) {
  double lp = 0;
  for (std::size_t r = 0; r < p.regions.size(); ++r) {
    const auto& g = p.regions[r];
    const double n_max = r < spec.N_max.size() ? spec.N_max[r] : std::numeric_limits<double>::infinity();
    if (!(g.k > 0 && g.k <= spec.k_max) || !(g.theta > 0 && g.theta <= spec.theta_max) ||
        !(g.N > 0 && g.N <= n_max) || !std::isfinite(g.t0))
      return neg_inf;
    const double z = (g.t0 - spec.t0_mean) / spec.t0_sd;
    lp += -0.5 * z * z - std::log(spec.t0_sd) - 0.5 * log_2pi;
  }
  for (double ls : {p.log_sigma_a, p.log_sigma_m})
    if (!(ls >= spec.log_sigma_lo && ls <= spec.log_sigma_hi)) return neg_inf;
  if (spatial) {
    if (!(p.lambda >= spec.lambda_lo && p.lambda <= spec.lambda_hi)) return neg_inf;
    if (!std::isfinite(p.log_tau2)) return neg_inf;
    switch (spec.tau_prior) {
    case SpatialScalePrior::neg_log_tau2:
      lp += gamma_logpdf(-p.log_tau2, spec.tau_shape, spec.tau_scale);
      break;
    case SpatialScalePrior::tau: {
      const double tau = std::exp(0.5 * p.log_tau2);
      lp += gamma_logpdf(tau, spec.tau_shape, spec.tau_scale) + std::log(tau) - std::numbers::ln2;
      break;
    }
    }
  }
  return lp;
}

double log_prior(const ParamVector& p, const PriorSpec& spec) {
  return log_prior(p, spec, true);
}

Eigen::MatrixXd predict_normalized(const ParamVector& p, const CalibrationData& data,
                                   const IncubationDraw& draw, std::size_t n_days) {
  Eigen::MatrixXd pred(static_cast<Eigen::Index>(n_days), static_cast<Eigen::Index>(data.n_regions()));
  std::vector<double> buf(n_days);
  for (std::size_t r = 0; r < data.n_regions(); ++r) {
    predict_daily(p.regions[r], draw, data.first_day, buf);
    const double inv_pop = 1.0 / static_cast<double>(data.populations[r]);
    for (std::size_t i = 0; i < n_days; ++i)
      pred(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) = buf[i] * inv_pop;
  }
  return pred;
}

double log_likelihood(const ParamVector& p, const CalibrationData& data, const IncubationDraw& draw,
                      const LikelihoodOptions& options) {
  const auto R = static_cast<Eigen::Index>(data.n_regions());
  const auto D = static_cast<Eigen::Index>(data.n_days());
  if (p.regions.size() != data.n_regions()) throw InvalidInput("log_likelihood: region count mismatch");
  for (const auto& g : p.regions)
    if (!g.valid()) return neg_inf;
  const GlobalParams gp = p.global();
  const Eigen::MatrixXd pred = predict_normalized(p, data, draw, data.n_days());

  double ll = 0;
  if (R == 1) {
    const double extra = options.single_region_spatial ? gp.tau2 : 0.0;
    for (Eigen::Index i = 0; i < D; ++i) {
      const double sd = gp.sigma_a + gp.sigma_m * pred(i, 0);
      const double var = extra + sd * sd;
      if (!(var > 0) || !std::isfinite(var)) {
        warn_non_spd("variance");
        return neg_inf;
      }
      const double r = data.observed(i, 0) - pred(i, 0);
      ll += -0.5 * (log_2pi + std::log(var) + r * r / var);
    }
    return ll;
  }

  if (!data.adjacency) throw InvalidInput("log_likelihood: several regions but no adjacency");
  std::optional<SpatialKernel> kernel;
  try {
    kernel.emplace(precision_matrix(gp.tau2, gp.lambda, *data.adjacency));
  } catch (const NumericalError&) {
    warn_non_spd("spatial precision");
    return neg_inf;
  }
  Eigen::MatrixXd S(R, R);
  Eigen::VectorXd resid(R);
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  for (Eigen::Index i = 0; i < D; ++i) {
    S = kernel->covariance();
    for (Eigen::Index j = 0; j < R; ++j) {
      const double sd = gp.sigma_a + gp.sigma_m * pred(i, j);
      S(j, j) += sd * sd;
    }
    llt.compute(S);
    if (llt.info() != Eigen::Success) {
      warn_non_spd("day covariance");
      return neg_inf;
    }
    resid = data.observed.row(i).transpose() - pred.row(i).transpose();
    llt.matrixL().solveInPlace(resid);
    double logdet = 0;
    for (Eigen::Index j = 0; j < R; ++j) logdet += 2 * std::log(llt.matrixLLT()(j, j));
    ll += -0.5 * (static_cast<double>(R) * log_2pi + logdet + resid.squaredNorm());
  }
  return std::isfinite(ll) ? ll : neg_inf;
}

Posterior::Posterior(CalibrationData data, PriorSpec prior, LikelihoodOptions options)
    : data_(std::move(data)), prior_(std::move(prior)), options_(options),
      layout_(make_layout(data_, options_)) {
  if (prior_.N_max.empty()) prior_.N_max = PriorSpec::for_populations(data_.populations).N_max;
  prior_.validate();
  if (options_.incubation_draws < 1) throw InvalidInput("incubation_draws must be >= 1");
  if (data_.n_regions() > 1 && !data_.adjacency)
    throw InvalidInput("several regions need an adjacency");
}

double Posterior::log_posterior(const Eigen::VectorXd& x, const IncubationDraw& draw) const {
  const ParamVector p = ParamVector::unpack(layout_, x);
  const double lp = log_prior(p, prior_, layout_.spatial);
  if (!std::isfinite(lp)) return neg_inf;
  return lp + log_likelihood(p, data_, draw, options_);
}

double Posterior::log_posterior_estimate(const Eigen::VectorXd& x, Rng& rng) const {
  const ParamVector p = ParamVector::unpack(layout_, x);
  const double lp = log_prior(p, prior_, layout_.spatial);
  if (!std::isfinite(lp)) return neg_inf;
  if (options_.incubation_draws == 1)
    return lp + log_likelihood(p, data_, sample_incubation(options_.hyper, rng), options_);
  std::vector<double> lls(static_cast<std::size_t>(options_.incubation_draws));
  double mx = neg_inf;
  for (auto& v : lls) {
    v = log_likelihood(p, data_, sample_incubation(options_.hyper, rng), options_);
    mx = std::max(mx, v);
  }
  if (!std::isfinite(mx)) return neg_inf;
  double s = 0;
  for (double v : lls) s += std::exp(v - mx);
  return lp + mx + std::log(s / static_cast<double>(lls.size()));
}

ParamVector Posterior::initial_point() const {
  const IncubationDraw central{options_.hyper.mu_center, options_.hyper.sigma_quantile(0.5)};
  const auto D = data_.n_days();
  ParamVector p;
  double sse_total = 0;
  std::vector<double> unit(D);
  for (std::size_t r = 0; r < data_.n_regions(); ++r) {
    const double pop = static_cast<double>(data_.populations[r]);
    const double n_cap = 0.99 * prior_.N_max[r];
    RegionParams best{prior_.t0_mean, 2, 10, 1};
    double best_sse = std::numeric_limits<double>::infinity();
    for (double k : {1.2, 1.5, 2.0, 3.0, 5.0, 8.0, 12.0})
      for (double theta : {2.0, 3.0, 5.0, 8.0, 12.0, 20.0, 35.0, 60.0})
        for (double dt0 : {-40.0, -30.0, -20.0, -10.0, 0.0, 10.0, 20.0}) {
          const RegionParams g{prior_.t0_mean + dt0, k, theta, 1.0};
          if (g.k > prior_.k_max || g.theta > prior_.theta_max) continue;
          predict_daily(g, central, data_.first_day, unit);
          double sym = 0, smm = 0;
          for (std::size_t i = 0; i < D; ++i) {
            sym += data_.observed(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) * pop * unit[i];
            smm += unit[i] * unit[i];
          }
          if (!(smm > 0)) continue;
          const double N = std::clamp(sym / smm, 1.0, n_cap);
          double sse = 0;
          for (std::size_t i = 0; i < D; ++i) {
            const double e = data_.observed(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) -
                             N * unit[i] / pop;
            sse += e * e;
          }
          if (sse < best_sse) {
            best_sse = sse;
            best = {g.t0, k, theta, N};
          }
        }
    p.regions.push_back(best);
    sse_total += best_sse;
  }
  const double rms = std::sqrt(sse_total / static_cast<double>(D * data_.n_regions()));
  const double floor = std::exp(prior_.log_sigma_lo + 1);
  p.log_sigma_a = std::clamp(std::log(std::max(rms, floor)), prior_.log_sigma_lo + 1, prior_.log_sigma_hi - 1);
  p.log_sigma_m = std::log(0.05);
  if (layout_.spatial) {
    p.log_tau2 = std::min(std::log(std::max(0.25 * rms * rms, 1e-300)), -1.0);
    p.lambda = 0.5 * (prior_.lambda_lo + prior_.lambda_hi);
  } else {
    p.log_tau2 = 0;
    p.lambda = 0;
  }
  return p;
}

Eigen::VectorXd Posterior::initial_proposal_sd(const ParamVector& p) const {
  Eigen::VectorXd sd(static_cast<Eigen::Index>(layout_.dim()));
  Eigen::Index i = 0;
  for (const auto& g : p.regions) {
    sd(i++) = 0.5;
    sd(i++) = 0.02 * g.k;
    sd(i++) = 0.02 * g.theta;
    sd(i++) = 0.02 * g.N;
  }
  sd(i++) = 0.05;
  sd(i++) = 0.05;
  if (layout_.spatial) {
    sd(i++) = 0.1;
    sd(i++) = 0.02;
  }
  return sd;
}

} // namespace epifield
