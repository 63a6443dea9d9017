#pragma once

// Renewal-equation arithmetic shared by the simulator and the samplers.
//
// Day conventions: days are 1-based. Series are stored in std::vector with index 0 holding
// day 1. Delay distributions are indexed by lag in whole days starting at lag 1 (no same-day
// transmission or death). R_t on day t drives the expected infections on day t + 1.

#include <cstdint>
#include <span>
#include <vector>

namespace rtphase {

// Daily probability masses of a delay distribution; masses()[0] is lag 1.
class Discretized_interval {
 public:
  Discretized_interval() = default;

  // Masses are validated (non-negative, positive total) and renormalised to sum to 1.
  // Mean and sd are recomputed from the masses.
  static auto from_masses(std::vector<double> masses) -> Discretized_interval;

  auto masses() const -> std::span<const double> { return masses_; }
  auto max_lag() const -> int { return static_cast<int>(masses_.size()); }
  auto mass(int lag) const -> double {
    return (lag >= 1 && lag <= max_lag()) ? masses_[lag - 1] : 0.0;
  }

  // Parameters of the continuous distribution this was built from.
  auto mean_days() const -> double { return mean_days_; }
  auto sd_days() const -> double { return sd_days_; }

  auto discrete_mean() const -> double;

  // P(Y > lag) for lag = 0..n-1.
  auto survival(int n) const -> std::vector<double>;

 private:
  friend auto discretize_gamma(double mean_days, double sd_days) -> Discretized_interval;
  std::vector<double> masses_;
  double mean_days_ = 0.0;
  double sd_days_ = 0.0;
};

// Gamma(shape (mean/sd)^2, rate mean/sd^2) discretised as CDF differences over
// (lag - 1, lag], truncated at the first lag with F(lag) >= 0.999 and renormalised.
auto discretize_gamma(double mean_days, double sd_days) -> Discretized_interval;

// Closed population state through some day. Counts are real-valued so the same type carries
// latent (expected) infections during inference.
struct Epidemic_state {
  double population_n = 0.0;
  std::vector<double> susceptible;  // S_t after day t's infections
  std::vector<double> infections;   // c_t
  std::vector<double> deaths;       // d_t

  auto days() const -> int { return static_cast<int>(infections.size()); }

  // Rebuilds `susceptible` from `infections` (S_t = n - sum_{s<=t} c_s).
  auto recompute_susceptible() -> void;
};

// I_t = sum_{s<=t} c_s * P(Y > t - s). `survival[lag]` is P(Y > lag), lag = 0..T-1.
auto active_infectives(std::span<const double> infections, std::span<const double> survival)
    -> std::vector<double>;

// Unscaled renewal force on day `day`: sum_{s<day} c_s g(day - s).
auto renewal_force(std::span<const double> infections, const Discretized_interval& gi, int day)
    -> double;

// E[c_{t+1}] = (S_t / n) * R_t * sum_{s<t+1} c_s g(t + 1 - s). `rt_daily[0]` is R_1.
auto renewal_expectation(const Epidemic_state& state, std::span<const double> rt_daily,
                         const Discretized_interval& gi, int t) -> double;

// E[d_t] = IFR * sum_{i>=1} c_{t-i} pi(i).
auto death_expectation(std::span<const double> infections, double ifr,
                       const Discretized_interval& pi, int t) -> double;

// Re(t) = (S_t / n) * R_t.
auto effective_r(double rt_value, double susceptible_s, double population_n) -> double;

// Negative binomial log pmf, mean/dispersion parameterisation (variance mu + mu^2/k).
// mu == 0 is a point mass at 0; k == +inf is the Poisson limit.
auto negbin_log_pmf(std::int64_t count, double mean_mu, double dispersion_k) -> double;

// Same formula without argument checks, for real-valued counts in hot loops.
auto negbin_log_pmf_unchecked(double count, double mean_mu, double dispersion_k) -> double;

// log Gamma(x + k) - log Gamma(k) - log Gamma(x + 1): the count-dependent normaliser of the
// negative binomial pmf, cached by the likelihood evaluators.
auto negbin_log_normaliser(double count, double dispersion_k) -> double;

// negbin_log_pmf_unchecked with the normaliser supplied by the caller.
inline auto negbin_log_kernel(double count, double mean_mu, double dispersion_k,
                              double normaliser) -> double;

}  // namespace rtphase

#include "rtphase/epi_core_inl.hpp"
