#pragma once

#include "epifield/epimodel.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace epifield {

struct AmcmcConfig {
  std::size_t n_steps = 200000;
  std::size_t adapt_start = 1000;
  std::size_t burn_in = 50000;
  std::size_t thin = 20;
  std::uint64_t seed = 1;
  double epsilon = 1e-6;
  /// Re-estimate the current state's likelihood every step (Monte Carlo within
  /// Metropolis). Off by default: the stored estimate is reused, which is what
  /// keeps the chain exact.
  bool refresh_current = false;
  /// Proposal standard deviations before adaptation; empty = 1% of |x| (min 1e-3).
  Eigen::VectorXd initial_sd;
  /// Record the proposal-covariance trace every this many steps.
  std::size_t trace_every = 1000;

  /// 2e6 steps, 5e5 burn-in, thin 100.
  static AmcmcConfig paper_scale();
  void validate() const;
};

struct Chain {
  std::vector<std::string> names;
  Eigen::MatrixXd samples; // n_kept x dim
  std::vector<double> log_post;
  double acceptance_rate = 0;         // over all steps
  double adapted_acceptance_rate = 0; // over steps after adapt_start
  std::vector<double> proposal_cov_trace;
  std::uint64_t seed = 0;
  AmcmcConfig config;

  std::size_t n_kept() const noexcept { return static_cast<std::size_t>(samples.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(samples.cols()); }
};

/// Log target (possibly a noisy estimate); may return -inf.
using LogTarget = std::function<double(const Eigen::VectorXd&, Rng&)>;

/// Adaptive Metropolis with Gaussian random-walk proposals. After
/// `adapt_start` steps the proposal covariance is s_d (Cov(history) + eps I),
/// s_d = 2.4^2 / dim, with the history covariance updated every step.
/// Throws InvalidInput when the target is -inf at `init`.
Chain amcmc_run(const LogTarget& target, const Eigen::VectorXd& init, const AmcmcConfig& config,
                std::vector<std::string> names = {});

} // namespace epifield
