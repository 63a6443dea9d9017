#include "rtphase/phase_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "rtphase/errors.hpp"

namespace rtphase {

namespace {
constexpr auto k_neg_inf = -std::numeric_limits<double>::infinity();
}

auto Phase_value_prior::log_density_of_log(double log_r) const -> double {
  auto z = (log_r - log_mean) / log_sd;
  return -0.5 * z * z - std::log(log_sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

auto Phase_value_prior::log_density(double r) const -> double {
  if (!(r > 0.0)) {
    return k_neg_inf;
  }
  return log_density_of_log(std::log(r)) - std::log(r);
}

auto Phase_value_prior::sample(Random_stream& rng) const -> double {
  return std::exp(log_mean + log_sd * draw_normal(rng));
}

auto fixedk_changepoints_logprior(std::span<const double> changepoints, double horizon,
                                  const Fixed_k_prior& prior) -> double {
  if (changepoints.empty()) {
    return 0.0;
  }
  auto t1 = changepoints.front();
  if (!(t1 > prior.t1_lower && t1 < horizon)) {
    return k_neg_inf;
  }
  auto log_p = -std::log(horizon - prior.t1_lower);
  for (auto i = std::size_t{1}; i < changepoints.size(); ++i) {
    auto gap = changepoints[i] - changepoints[i - 1];
    if (!(gap > 0.0 && gap < prior.gap_upper)) {
      return k_neg_inf;
    }
    log_p -= std::log(prior.gap_upper);
  }
  if (!(changepoints.back() < horizon)) {
    return k_neg_inf;
  }
  return log_p;
}

auto phase_of_day(std::span<const double> changepoints, int day) -> int {
  // changepoints are sorted; count those strictly below `day`
  auto it = std::lower_bound(changepoints.begin(), changepoints.end(), static_cast<double>(day));
  return static_cast<int>(it - changepoints.begin());
}

auto pp_stick_weights(std::span<const double> durations, double horizon, int k_max)
    -> Stick_weights {
  auto limit = std::min<std::ptrdiff_t>(std::ssize(durations), k_max);
  auto cumulative = 0.0;
  auto k = 0;
  for (auto i = 0; i < limit; ++i) {
    if (!(durations[i] > 0.0)) {
      throw Domain_error{fmt::format("stick duration {} must be positive", durations[i])};
    }
    cumulative += durations[i];
    if (cumulative >= horizon) {
      k = i + 1;
      break;
    }
  }
  if (k == 0) {
    throw Truncation_overflow{fmt::format(
        "stick durations sum to {} < horizon {} within Kmax = {}", cumulative, horizon, k_max)};
  }
  auto result = Stick_weights{std::vector<double>(static_cast<std::size_t>(k)), k};
  auto used = 0.0;
  for (auto i = 0; i < k - 1; ++i) {
    result.weights[i] = durations[i] / horizon;
    used += result.weights[i];
  }
  result.weights[k - 1] = std::max(0.0, 1.0 - used);
  return result;
}

auto dp_stick_weights(std::span<const double> betas) -> std::vector<double> {
  auto weights = std::vector<double>(betas.size() + 1);
  auto rest = 1.0;
  for (auto l = std::size_t{0}; l != betas.size(); ++l) {
    auto v = betas[l];
    if (!(v > 0.0 && v < 1.0)) {
      throw Domain_error{fmt::format("stick fraction v_{} = {} outside (0, 1)", l + 1, v)};
    }
    weights[l] = v * rest;
    rest *= (1.0 - v);
  }
  weights.back() = rest;

  // rest-of-stick rounding: fold the residual into the largest weight
  for (auto pass = 0; pass != 2; ++pass) {
    auto sum = 0.0;
    for (auto w : weights) {
      sum += w;
    }
    auto largest = std::max_element(weights.begin(), weights.end());
    *largest += 1.0 - sum;
  }
  return weights;
}

auto sample_pp_durations(Random_stream& rng, double lambda, int k_max) -> std::vector<double> {
  auto durations = std::vector<double>(static_cast<std::size_t>(k_max));
  for (auto& d : durations) {
    d = draw_exponential(rng, lambda);
  }
  return durations;
}

auto sample_dp_betas(Random_stream& rng, double theta, int truncation) -> std::vector<double> {
  auto betas = std::vector<double>(static_cast<std::size_t>(std::max(truncation - 1, 0)));
  for (auto& v : betas) {
    v = draw_beta(rng, 1.0, theta);
  }
  return betas;
}

auto assemble_rt(std::vector<double> phase_values, std::vector<int> labels) -> Phase_trajectory {
  return Phase_trajectory::from_labels(std::move(phase_values), std::move(labels));
}

auto assemble_rt(std::vector<double> phase_values, std::vector<int> changepoints, int horizon)
    -> Phase_trajectory {
  return Phase_trajectory::from_changepoints(std::move(phase_values), std::move(changepoints),
                                             horizon);
}

auto daily_rt_from_changepoints(std::span<const double> phase_values,
                                std::span<const double> changepoints, int horizon)
    -> std::vector<double> {
  if (phase_values.size() != changepoints.size() + 1) {
    throw Shape_error{"daily_rt_from_changepoints: need K values for K-1 changepoints"};
  }
  auto daily = std::vector<double>(static_cast<std::size_t>(horizon));
  auto phase = std::size_t{0};
  for (auto day = 1; day <= horizon; ++day) {
    while (phase < changepoints.size() && changepoints[phase] < day) {
      ++phase;
    }
    daily[day - 1] = phase_values[phase];
  }
  return daily;
}

}  // namespace rtphase
