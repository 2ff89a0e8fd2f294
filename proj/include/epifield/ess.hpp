#pragma once

#include <span>

namespace epifield {

/// Effective sample size N / (1 + 2 sum rho_k), with the autocorrelation sum
/// truncated by Geyer's initial monotone sequence rule. Clamped to [1, N].
/// A constant column returns 1 and logs a degenerate-chain warning.
/// Throws InvalidInput for fewer than 100 values.
double ess(std::span<const double> column);

} // namespace epifield
