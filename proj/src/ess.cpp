#include "epifield/ess.hpp"

#include "epifield/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace epifield {

double ess(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 100) throw InvalidInput("ess: need at least 100 samples");
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> c(n);
  double c0 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = x[i] - mean;
    c0 += c[i] * c[i];
  }
  c0 /= static_cast<double>(n);
  if (!(c0 > 0) || c0 <= 1e-300) {
    spdlog::warn("ess: constant chain column, returning 1");
    return 1.0;
  }

  auto rho = [&](std::size_t lag) {
    double s = 0;
    for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
    return s / static_cast<double>(n) / c0;
  };

  // Pairs Gamma_m = rho_{2m} + rho_{2m+1}, kept while positive and forced monotone.
  double tau = -1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double gamma = (m == 0 ? 1.0 : rho(2 * m)) + rho(2 * m + 1);
    if (gamma <= 0) break;
    gamma = std::min(gamma, prev);
    prev = gamma;
    tau += 2 * gamma;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(n));
  return std::clamp(static_cast<double>(n) / tau, 1.0, static_cast<double>(n));
}

} // namespace epifield
