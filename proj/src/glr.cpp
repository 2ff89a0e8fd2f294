#include "epifield/glr.hpp"

#include "epifield/errors.hpp"

#include <boost/math/distributions/poisson.hpp>
#include <spdlog/spdlog.h>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <limits>

namespace epifield {

namespace {

double poisson_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double s = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) s += y[i] * eta[i] - std::exp(eta[i]);
  return s;
}

} // namespace

Eigen::Vector4d GlrModel::design_row(double t, double omega) {
  return {1.0, t, std::sin(omega * t), std::cos(omega * t)};
}

double GlrModel::mean(Day d) const { return std::exp(log_mean(static_cast<double>(days_between(origin, d)))); }

PoissonFit poisson_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                        Eigen::VectorXd start, int max_iter, double tol) {
  const Eigen::Index p = X.cols();
  Eigen::VectorXd colmax(p);
  for (Eigen::Index j = 0; j < p; ++j) colmax[j] = std::max(1e-300, X.col(j).cwiseAbs().maxCoeff());
  const double yscale = std::max(1.0, y.sum());

  PoissonFit fit;
  fit.beta = std::move(start);
  Eigen::VectorXd eta = offset + X * fit.beta;
  double ll = poisson_loglik(y, eta);
  bool polished = false; // one extra Newton step once the tolerance is met
  for (int it = 0; it <= max_iter; ++it) {
    const Eigen::VectorXd mu = eta.array().exp();
    const Eigen::VectorXd grad = X.transpose() * (y - mu);
    fit.grad_norm = (grad.array().abs() / (colmax.array() * yscale)).maxCoeff();
    fit.iterations = it;
    if (fit.grad_norm < tol) {
      fit.converged = true;
      if (polished) break;
      polished = true;
    }
    if (it == max_iter) break;
    const Eigen::VectorXd sw = mu.array().sqrt();
    const Eigen::MatrixXd A = sw.asDiagonal() * X;
    const Eigen::VectorXd b = ((y - mu).array() / sw.array().max(1e-300)).matrix();
    Eigen::VectorXd step = A.colPivHouseholderQr().solve(b);
    if (!step.allFinite()) break;
    for (int half = 0; half < 50; ++half) {
      const Eigen::VectorXd cand = fit.beta + step;
      const Eigen::VectorXd eta_c = offset + X * cand;
      const double ll_c = poisson_loglik(y, eta_c);
      if (std::isfinite(ll_c) && ll_c >= ll - 1e-12 * std::abs(ll)) {
        fit.beta = cand;
        eta = eta_c;
        ll = ll_c;
        break;
      }
      step *= 0.5;
    }
  }
  const Eigen::VectorXd mu = eta.array().exp();
  const Eigen::MatrixXd info = X.transpose() * mu.asDiagonal() * X;
  const Eigen::MatrixXd cov = info.completeOrthogonalDecomposition().pseudoInverse();
  fit.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return fit;
}

GlrModel glr_fit(const CaseSeries& train, const GlrFitOptions& options) {
  const std::size_t n = train.size();
  if (n < options.min_days)
    throw InvalidInput("glr_fit: training window of " + std::to_string(n) + " days is shorter than " +
                       std::to_string(options.min_days));
  double total = 0;
  for (double c : train.counts) {
    if (!(c >= 0) || c != std::floor(c)) throw InvalidInput("glr_fit: counts must be non-negative integers");
    total += c;
  }
  if (total == 0) throw InvalidInput("glr_fit: all training counts are zero, the Poisson MLE does not exist");

  GlrModel m;
  m.origin = train.start;
  std::vector<Eigen::Index> free_idx;
  for (Eigen::Index j = 0; j < 4; ++j)
    if (options.free[static_cast<std::size_t>(j)]) free_idx.push_back(j);
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd X(N, static_cast<Eigen::Index>(free_idx.size()));
  Eigen::VectorXd offset(N), y(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const Eigen::Vector4d row = GlrModel::design_row(static_cast<double>(i), m.omega);
    for (std::size_t c = 0; c < free_idx.size(); ++c) X(i, static_cast<Eigen::Index>(c)) = row[free_idx[c]];
    offset[i] = 0;
    for (Eigen::Index j = 0; j < 4; ++j)
      if (!options.free[static_cast<std::size_t>(j)]) offset[i] += row[j] * options.fixed[j];
    y[i] = train.counts[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd start = Eigen::VectorXd::Zero(X.cols());
  if (options.free[0]) {
    double off_mean = offset.array().exp().mean();
    start[0] = std::log(total / static_cast<double>(n) / off_mean);
  }
  const PoissonFit fit = poisson_irls(X, y, offset, start, options.max_iter, options.tol);
  if (!fit.converged)
    throw NumericalError("glr_fit: IRLS did not converge in " + std::to_string(options.max_iter) +
                         " iterations (scaled gradient norm " + std::to_string(fit.grad_norm) + ")");
  m.beta = options.fixed;
  for (std::size_t c = 0; c < free_idx.size(); ++c) {
    m.beta[free_idx[c]] = fit.beta[static_cast<Eigen::Index>(c)];
    m.se[free_idx[c]] = fit.se[static_cast<Eigen::Index>(c)];
  }
  m.iterations = fit.iterations;
  m.grad_norm = fit.grad_norm;
  return m;
}

double poisson_log_ratio(std::span<const double> y, std::span<const double> mu1, std::span<const double> mu0) {
  if (y.size() != mu1.size() || y.size() != mu0.size()) throw InvalidInput("poisson_log_ratio: length mismatch");
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (mu1[i] == mu0[i]) continue;
    s += y[i] * (std::log(mu1[i]) - std::log(mu0[i])) - (mu1[i] - mu0[i]);
  }
  return s;
}

namespace {

/// sup over kappa >= 0 of sum y kappa - sum mu0 (e^kappa - 1).
double shift_llr(double Y, double M) { return Y > M ? Y * std::log(Y / M) - Y + M : 0.0; }

struct RefitCounter {
  std::size_t skipped = 0;
};

double refit_llr(std::span<const double> y, std::span<const double> t, std::span<const double> mu0,
                 const GlrModel& base, RefitCounter& counter) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd X(n, 4);
  Eigen::VectorXd yy(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) = GlrModel::design_row(t[static_cast<std::size_t>(i)], base.omega).transpose();
    yy[i] = y[static_cast<std::size_t>(i)];
  }
  if (yy.sum() == 0) {
    ++counter.skipped;
    return 0;
  }
  const PoissonFit fit = poisson_irls(X, yy, Eigen::VectorXd::Zero(n), base.beta, 100, 1e-8);
  if (!fit.converged) {
    ++counter.skipped;
    return 0;
  }
  std::vector<double> mu1(y.size());
  for (Eigen::Index i = 0; i < n; ++i) mu1[static_cast<std::size_t>(i)] = std::exp(X.row(i).dot(fit.beta));
  return std::max(0.0, poisson_log_ratio(y, mu1, mu0));
}

double statistic_at(std::span<const double> y, std::span<const double> t, std::span<const double> mu0,
                    std::size_t n, const GlrModel& base, const GlrDetectOptions& options, RefitCounter& counter) {
  double best = 0;
  if (options.alternative == GlrAlternative::intercept_shift) {
    double Y = 0, M = 0;
    for (std::size_t l = n + 1; l-- > 0;) {
      Y += y[l];
      M += mu0[l];
      best = std::max(best, shift_llr(Y, M));
    }
    return best;
  }
  for (std::size_t l = 0; l <= n; ++l) {
    const std::size_t len = n - l + 1;
    if (len < options.min_refit_days) {
      ++counter.skipped;
      continue;
    }
    best = std::max(best, refit_llr(y.subspan(l, len), t.subspan(l, len), mu0.subspan(l, len), base, counter));
  }
  return best;
}

} // namespace

std::vector<double> glr_statistic(std::span<const double> y, std::span<const double> t, const GlrModel& base,
                                  const GlrDetectOptions& options) {
  if (y.size() != t.size()) throw InvalidInput("glr_statistic: length mismatch");
  if (y.size() > options.max_window)
    throw InvalidInput("glr test window of " + std::to_string(y.size()) + " days exceeds " +
                       std::to_string(options.max_window));
  std::vector<double> mu0(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) mu0[i] = std::exp(base.log_mean(t[i]));
  RefitCounter counter;
  std::vector<double> S(y.size());
  for (std::size_t n = 0; n < y.size(); ++n) S[n] = statistic_at(y, t, mu0, n, base, options, counter);
  if (counter.skipped > 0) spdlog::warn("glr: {} changepoint windows skipped (too short or refit failed)", counter.skipped);
  return S;
}

DetectionReport glr_detect(const CaseSeries& test, const GlrModel& base, const GlrDetectOptions& options) {
  const std::size_t L = test.size();
  if (L == 0) throw InvalidInput("glr_detect: empty test window");
  if (L > options.max_window)
    throw InvalidInput("glr test window of " + std::to_string(L) + " days exceeds " +
                       std::to_string(options.max_window));
  for (double c : test.counts)
    if (!(c >= 0)) throw InvalidInput("glr_detect: negative count");

  std::vector<double> y = test.counts, t(L), mu0(L);
  const double t_first = static_cast<double>(days_between(base.origin, test.start));
  for (std::size_t i = 0; i < L; ++i) {
    t[i] = t_first + static_cast<double>(i);
    mu0[i] = std::exp(base.log_mean(t[i]));
  }

  RefitCounter counter;
  std::vector<double> S(L), boundary(L), q99(L);
  for (std::size_t n = 0; n < L; ++n) {
    S[n] = statistic_at(y, t, mu0, n, base, options, counter);
    q99[n] = boost::math::quantile(boost::math::poisson_distribution<>(mu0[n]), 0.99);

    // Largest count on day n keeping S_n <= c; S_n is non-decreasing in y_n
    // under the intercept-shift alternative.
    const double keep = y[n];
    auto stat = [&](double v) {
      y[n] = v;
      return statistic_at(y, t, mu0, n, base, options, counter);
    };
    if (stat(0) > options.c_gamma) {
      boundary[n] = -1;
    } else {
      double lo = 0, hi = std::max(1.0, 2 * mu0[n]);
      while (stat(hi) <= options.c_gamma) {
        lo = hi;
        hi *= 2;
        if (hi > 1e15) break;
      }
      for (int it = 0; it < 200 && hi - lo > 1e-9 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (stat(mid) <= options.c_gamma ? lo : hi) = mid;
      }
      boundary[n] = lo;
    }
    y[n] = keep;
  }
  if (counter.skipped > 0) spdlog::warn("glr: {} changepoint windows skipped (too short or refit failed)", counter.skipped);

  DetectionReport r;
  r.detector = DetectorId::glr_poisson;
  r.region = test.region_id;
  r.start = test.start;
  r.run_length = options.run_length;
  r.observed = test.counts;
  r.boundary = boundary;
  std::vector<bool> flag(L);
  for (std::size_t i = 0; i < L; ++i) flag[i] = r.observed[i] > boundary[i];
  mark_runs(r, flag);
  r.extra = {{"glr_statistic", S}, {"poisson_q99", q99}};
  return r;
}

} // namespace epifield
