#pragma once

#include <cmath>
#include <limits>

namespace rtphase {

inline auto negbin_log_kernel(double count, double mean_mu, double dispersion_k,
                              double normaliser) -> double {
  if (!(mean_mu > 0.0)) {
    return count == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  if (!std::isfinite(dispersion_k)) {
    return normaliser + count * std::log(mean_mu) - mean_mu;
  }
  // k log(k/(k+mu)) + x log(mu/(k+mu)), arranged to stay accurate for k >> mu
  auto ratio = mean_mu / dispersion_k;
  auto log_mu_over_sum = std::log(mean_mu) - std::log(dispersion_k + mean_mu);
  return normaliser - dispersion_k * std::log1p(ratio) + count * log_mu_over_sum;
}

}  // namespace rtphase
