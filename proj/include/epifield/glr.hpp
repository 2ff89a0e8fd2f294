#pragma once

#include "epifield/data.hpp"
#include "epifield/detect.hpp"

#include <Eigen/Core>

#include <array>
#include <numbers>
#include <span>

namespace epifield {

/// log mu_t = b0 + b1 t + b2 sin(omega t) + b3 cos(omega t), with t in days
/// since `origin` (the first training day). One harmonic.
struct GlrModel {
  Eigen::Vector4d beta = Eigen::Vector4d::Zero();
  Eigen::Vector4d se = Eigen::Vector4d::Zero(); // 0 for coefficients held fixed
  double omega = 2 * std::numbers::pi / 365;
  int harmonics = 1;
  double c_gamma = 3;
  Day origin{};
  int iterations = 0;
  double grad_norm = 0;

  static Eigen::Vector4d design_row(double t, double omega);
  double log_mean(double t) const { return design_row(t, omega).dot(beta); }
  double mean(Day d) const;
};

struct PoissonFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  int iterations = 0;
  double grad_norm = 0;
  bool converged = false;
};

/// Poisson log-linear maximum likelihood by iteratively reweighted least
/// squares, with step halving. Convergence is on the gradient scaled per
/// column by max(1, sum y) * max|X_j|, which keeps the 1e-8 target meaningful
/// for the day-index column.
PoissonFit poisson_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                        Eigen::VectorXd start, int max_iter = 100, double tol = 1e-8);

struct GlrFitOptions {
  std::array<bool, 4> free{true, true, true, true};
  Eigen::Vector4d fixed = Eigen::Vector4d::Zero(); // values of the non-free coefficients
  int max_iter = 100;
  double tol = 1e-8;
  std::size_t min_days = 30;
};

/// Throws InvalidInput for short windows, negative or non-integer counts, and
/// all-zero counts; NumericalError when IRLS does not converge.
GlrModel glr_fit(const CaseSeries& train, const GlrFitOptions& options = {});

enum class GlrAlternative {
  intercept_shift, // mu1 = mu0 exp(kappa), kappa >= 0: closed-form supremum
  full_refit,      // all four coefficients refitted on each window
};

struct GlrDetectOptions {
  double c_gamma = 3;
  GlrAlternative alternative = GlrAlternative::intercept_shift;
  int run_length = 3;
  std::size_t max_window = 31;
  std::size_t min_refit_days = 5; // full_refit skips shorter windows
};

/// sum_t log(f(y_t; mu1_t) / f(y_t; mu0_t)) for Poisson f.
double poisson_log_ratio(std::span<const double> y, std::span<const double> mu1, std::span<const double> mu0);

/// S_n = max over changepoints l <= n of sup_alternative sum_{t=l..n} log ratio,
/// for n = 1..L. t values are days since the base model origin.
std::vector<double> glr_statistic(std::span<const double> y, std::span<const double> t, const GlrModel& base,
                                  const GlrDetectOptions& options = {});

/// Online GLR over the test window. Day n is an outlier when S_n > c_gamma;
/// the reported boundary is the smallest count on day n that would push S_n
/// above c_gamma given the earlier days, so outliers are again observed >
/// boundary. Alarms follow the run rule. The base model's Poisson 99%
/// quantile and S_n are attached as extra series.
DetectionReport glr_detect(const CaseSeries& test, const GlrModel& base, const GlrDetectOptions& options = {});

} // namespace epifield
