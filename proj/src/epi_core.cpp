#include "rtphase/epi_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/gamma.hpp>
#include <fmt/format.h>

#include "rtphase/errors.hpp"

namespace rtphase {

namespace {

constexpr auto k_captured_mass = 0.999;
constexpr auto k_max_support_days = 10000;

}  // namespace

auto Discretized_interval::from_masses(std::vector<double> masses) -> Discretized_interval {
  if (masses.empty()) {
    throw Domain_error{"delay distribution needs at least one lag"};
  }
  auto total = 0.0;
  for (auto m : masses) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw Domain_error{"delay masses must be finite and non-negative"};
    }
    total += m;
  }
  if (!(total > 0.0)) {
    throw Domain_error{"delay masses sum to zero"};
  }
  for (auto& m : masses) {
    m /= total;
  }
  auto result = Discretized_interval{};
  result.masses_ = std::move(masses);
  result.mean_days_ = result.discrete_mean();
  auto var = 0.0;
  for (auto lag = 1; lag <= result.max_lag(); ++lag) {
    var += result.mass(lag) * (lag - result.mean_days_) * (lag - result.mean_days_);
  }
  result.sd_days_ = std::sqrt(var);
  return result;
}

auto Discretized_interval::discrete_mean() const -> double {
  auto mean = 0.0;
  for (auto lag = 1; lag <= max_lag(); ++lag) {
    mean += lag * mass(lag);
  }
  return mean;
}

auto Discretized_interval::survival(int n) const -> std::vector<double> {
  auto result = std::vector<double>(static_cast<std::size_t>(std::max(n, 0)));
  auto cdf = 0.0;
  for (auto lag = 0; lag < n; ++lag) {
    cdf += mass(lag);
    result[lag] = std::max(0.0, 1.0 - cdf);
  }
  return result;
}

auto discretize_gamma(double mean_days, double sd_days) -> Discretized_interval {
  if (!(mean_days > 0.0) || !(sd_days > 0.0) || !std::isfinite(mean_days) ||
      !std::isfinite(sd_days)) {
    throw Domain_error{fmt::format("gamma interval needs positive mean and sd (got {}, {})",
                                   mean_days, sd_days)};
  }
  auto shape = (mean_days / sd_days) * (mean_days / sd_days);
  auto rate = mean_days / (sd_days * sd_days);
  auto dist = boost::math::gamma_distribution<double>{shape, 1.0 / rate};

  auto cdf = std::vector<double>{0.0};
  while (cdf.back() < k_captured_mass) {
    if (std::ssize(cdf) > k_max_support_days) {
      throw Domain_error{"gamma interval has more than 10000 days of support"};
    }
    cdf.push_back(boost::math::cdf(dist, static_cast<double>(cdf.size())));
  }

  auto result = Discretized_interval{};
  auto s_max = std::ssize(cdf) - 1;
  result.masses_.resize(s_max);
  for (auto lag = 1; lag <= s_max; ++lag) {
    result.masses_[lag - 1] = (cdf[lag] - cdf[lag - 1]) / cdf[s_max];
  }
  // pin the total to 1 against accumulated rounding
  auto total = std::accumulate(result.masses_.begin(), result.masses_.end(), 0.0);
  for (auto& m : result.masses_) {
    m /= total;
  }
  result.mean_days_ = mean_days;
  result.sd_days_ = sd_days;
  return result;
}

auto Epidemic_state::recompute_susceptible() -> void {
  susceptible.resize(infections.size());
  auto cumulative = 0.0;
  for (auto i = std::size_t{0}; i != infections.size(); ++i) {
    cumulative += infections[i];
    susceptible[i] = std::max(0.0, population_n - cumulative);
  }
}

auto active_infectives(std::span<const double> infections, std::span<const double> survival)
    -> std::vector<double> {
  if (infections.size() != survival.size()) {
    throw Shape_error{fmt::format("active_infectives: {} infection days vs {} survival lags",
                                  infections.size(), survival.size())};
  }
  auto n = std::ssize(infections);
  auto result = std::vector<double>(infections.size(), 0.0);
  for (auto t = 0; t < n; ++t) {
    auto sum = 0.0;
    for (auto s = 0; s <= t; ++s) {
      sum += infections[s] * survival[t - s];
    }
    result[t] = sum;
  }
  return result;
}

auto renewal_force(std::span<const double> infections, const Discretized_interval& gi, int day)
    -> double {
  auto sum = 0.0;
  auto max_lag = std::min(day - 1, gi.max_lag());
  auto g = gi.masses();
  for (auto lag = 1; lag <= max_lag; ++lag) {
    sum += infections[day - 1 - lag] * g[lag - 1];
  }
  return sum;
}

auto renewal_expectation(const Epidemic_state& state, std::span<const double> rt_daily,
                         const Discretized_interval& gi, int t) -> double {
  if (t < 1 || t > state.days() || t > std::ssize(state.susceptible) ||
      t > std::ssize(rt_daily)) {
    throw Out_of_range_error{
        fmt::format("renewal_expectation: day {} is outside the populated state", t)};
  }
  if (!(state.population_n > 0.0)) {
    throw Domain_error{"renewal_expectation: population must be positive"};
  }
  auto force = renewal_force(state.infections, gi, t + 1);
  auto value = (state.susceptible[t - 1] / state.population_n) * rt_daily[t - 1] * force;
  return std::max(0.0, value);
}

auto death_expectation(std::span<const double> infections, double ifr,
                       const Discretized_interval& pi, int t) -> double {
  if (t < 1) {
    throw Out_of_range_error{fmt::format("death_expectation: day {} < 1", t)};
  }
  if (std::ssize(infections) < t - 1) {
    throw Shape_error{fmt::format("death_expectation: day {} needs {} infection days, have {}",
                                  t, t - 1, infections.size())};
  }
  auto sum = 0.0;
  auto max_lag = std::min(t - 1, pi.max_lag());
  auto masses = pi.masses();
  for (auto lag = 1; lag <= max_lag; ++lag) {
    sum += infections[t - 1 - lag] * masses[lag - 1];
  }
  return ifr * sum;
}

auto effective_r(double rt_value, double susceptible_s, double population_n) -> double {
  if (!(population_n > 0.0)) {
    throw Domain_error{"effective_r: population must be positive"};
  }
  if (susceptible_s < 0.0 || susceptible_s > population_n) {
    throw Domain_error{fmt::format("effective_r: S = {} outside [0, {}]", susceptible_s,
                                   population_n)};
  }
  return (susceptible_s / population_n) * rt_value;
}

auto negbin_log_normaliser(double count, double dispersion_k) -> double {
  if (!std::isfinite(dispersion_k)) {
    return -std::lgamma(count + 1.0);
  }
  auto log_ratio = 0.0;  // log Gamma(x + k) - log Gamma(k)
  if (count <= 64.0 && count == std::floor(count)) {
    auto n = static_cast<int>(count);
    for (auto i = 0; i < n; ++i) {
      log_ratio += std::log(dispersion_k + i);
    }
  } else {
    log_ratio = std::lgamma(count + dispersion_k) - std::lgamma(dispersion_k);
  }
  return log_ratio - std::lgamma(count + 1.0);
}

auto negbin_log_pmf_unchecked(double count, double mean_mu, double dispersion_k) -> double {
  if (!(mean_mu > 0.0)) {
    return count == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return negbin_log_kernel(count, mean_mu, dispersion_k,
                           negbin_log_normaliser(count, dispersion_k));
}

auto negbin_log_pmf(std::int64_t count, double mean_mu, double dispersion_k) -> double {
  if (count < 0) {
    throw Domain_error{fmt::format("negbin_log_pmf: negative count {}", count)};
  }
  if (!(mean_mu >= 0.0) || !(dispersion_k > 0.0)) {
    throw Domain_error{fmt::format("negbin_log_pmf: invalid mean {} or dispersion {}", mean_mu,
                                   dispersion_k)};
  }
  return negbin_log_pmf_unchecked(static_cast<double>(count), mean_mu, dispersion_k);
}

}  // namespace rtphase
