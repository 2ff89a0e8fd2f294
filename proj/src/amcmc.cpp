#include "epifield/amcmc.hpp"

#include "epifield/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <random>

namespace epifield {

AmcmcConfig AmcmcConfig::paper_scale() {
  AmcmcConfig c;
  c.n_steps = 2000000;
  c.burn_in = 500000;
  c.thin = 100;
  return c;
}

void AmcmcConfig::validate() const {
  if (n_steps == 0) throw InvalidInput("amcmc: n_steps must be positive");
  if (burn_in >= n_steps) throw InvalidInput("amcmc: burn_in must be smaller than n_steps");
  if (thin == 0) throw InvalidInput("amcmc: thin must be positive");
  if (!(epsilon > 0)) throw InvalidInput("amcmc: epsilon must be positive");
}

Chain amcmc_run(const LogTarget& target, const Eigen::VectorXd& init, const AmcmcConfig& config,
                std::vector<std::string> names) {
  config.validate();
  const Eigen::Index d = init.size();
  if (d == 0) throw InvalidInput("amcmc: empty state");
  if (config.initial_sd.size() != 0 && config.initial_sd.size() != d)
    throw InvalidInput("amcmc: initial_sd has wrong dimension");

  Rng rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Eigen::VectorXd x = init;
  double logp = target(x, rng);
  if (!std::isfinite(logp)) throw InvalidInput("amcmc: log target is not finite at the initial point");

  Eigen::VectorXd sd0 = config.initial_sd;
  if (sd0.size() == 0) sd0 = (0.01 * init.cwiseAbs()).cwiseMax(1e-3);
  Eigen::MatrixXd L = sd0.asDiagonal();

  const double sd_scale = 2.4 * 2.4 / static_cast<double>(d);
  // Running mean / scatter over the whole history x_0, x_1, ...
  Eigen::VectorXd mean = x;
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  double n_hist = 1;

  Chain chain;
  chain.names = std::move(names);
  chain.seed = config.seed;
  chain.config = config;
  const std::size_t n_keep = (config.n_steps - config.burn_in) / config.thin;
  chain.samples.resize(static_cast<Eigen::Index>(n_keep), d);
  chain.log_post.reserve(n_keep);

  Eigen::VectorXd z(d), prop(d), delta(d);
  Eigen::LLT<Eigen::MatrixXd> llt(d);
  Eigen::MatrixXd C(d, d);
  std::size_t accepted = 0, accepted_adapted = 0, kept = 0;

  for (std::size_t step = 1; step <= config.n_steps; ++step) {
    if (step > config.adapt_start) {
      C = sd_scale * (scatter / (n_hist - 1) + config.epsilon * Eigen::MatrixXd::Identity(d, d));
      llt.compute(C);
      if (llt.info() == Eigen::Success) L = llt.matrixL();
    }
    if (config.trace_every && step % config.trace_every == 0)
      chain.proposal_cov_trace.push_back((L * L.transpose()).trace());

    for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(rng);
    prop = x + L * z;
    if (config.refresh_current) logp = target(x, rng);
    const double logp_prop = target(prop, rng);
    const double u = uniform(rng);
    if (std::isfinite(logp_prop) && (!std::isfinite(logp) || std::log(u) < logp_prop - logp)) {
      x = prop;
      logp = logp_prop;
      ++accepted;
      if (step > config.adapt_start) ++accepted_adapted;
    }

    n_hist += 1;
    delta = x - mean;
    mean += delta / n_hist;
    scatter.noalias() += delta * (x - mean).transpose();

    if (step > config.burn_in && (step - config.burn_in) % config.thin == 0 && kept < n_keep) {
      chain.samples.row(static_cast<Eigen::Index>(kept++)) = x.transpose();
      chain.log_post.push_back(logp);
    }
  }
  chain.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(config.n_steps);
  const std::size_t adapted_steps = config.n_steps > config.adapt_start ? config.n_steps - config.adapt_start : 0;
  chain.adapted_acceptance_rate =
      adapted_steps ? static_cast<double>(accepted_adapted) / static_cast<double>(adapted_steps) : 0.0;
  return chain;
}

} // namespace epifield
