#pragma once

// Priors over the phase structure of R_t: a fixed number of changepoints, Poisson-process
// stick breaking and truncated Dirichlet-process stick breaking.

#include <optional>
#include <span>
#include <vector>

#include "rtphase/phase_trajectory.hpp"
#include "rtphase/rng.hpp"

namespace rtphase {

// LogNormal prior on each phase value r_j.
struct Phase_value_prior {
  double log_mean = 0.0;
  double log_sd = 0.75;

  auto log_density(double r) const -> double;
  // Density of log r (what a random walk on log r targets).
  auto log_density_of_log(double log_r) const -> double;
  auto sample(Random_stream& rng) const -> double;
};

struct Fixed_k_prior {
  int k_phases = 1;
  double t1_lower = 3.0;    // T_1 ~ Uniform(t1_lower, T)
  double gap_upper = 100.0; // e_i ~ Uniform(0, gap_upper)
  Phase_value_prior r_prior;
};

struct Pp_prior {
  double lambda_shape = 0.02;
  double lambda_rate = 1.0;
  std::optional<double> fixed_lambda;
  int k_max = 100;
  Phase_value_prior r_prior;
};

struct Dp_prior {
  double theta_shape = 1.0;
  double theta_rate = 1.0;
  std::optional<double> fixed_theta;
  int truncation = 36;
  Phase_value_prior r_prior;
};

// Log density of continuous changepoints T_1 < ... < T_{K-1} under T_1 ~ U(t1_lower, T),
// T_{i+1} = T_i + e_i with e_i ~ U(0, gap_upper). -inf when any constraint fails (including
// unsorted input and T_{K-1} >= T).
auto fixedk_changepoints_logprior(std::span<const double> changepoints, double horizon,
                                  const Fixed_k_prior& prior) -> double;

// Phase index (0-based) of `day` given continuous changepoints: #{i : T_i < day}.
auto phase_of_day(std::span<const double> changepoints, int day) -> int;

struct Stick_weights {
  std::vector<double> weights;  // pi_1..pi_K
  int k = 0;
};

// K = min{j : sum_{i<=j} T_i >= T}; pi_k = T_k / T for k < K; pi_K = 1 - sum_{k<K} pi_k.
// Throws Truncation_overflow when the durations (at most k_max of them) never reach T.
auto pp_stick_weights(std::span<const double> durations, double horizon, int k_max)
    -> Stick_weights;

// w_1 = v_1, w_l = v_l prod_{j<l} (1 - v_j), w_L = prod_{j<L} (1 - v_j); L = betas.size() + 1.
// Residual rounding is folded into the largest weight so the sum is 1 to the last ulp.
auto dp_stick_weights(std::span<const double> betas) -> std::vector<double>;

auto sample_pp_durations(Random_stream& rng, double lambda, int k_max) -> std::vector<double>;
auto sample_dp_betas(Random_stream& rng, double theta, int truncation) -> std::vector<double>;

auto assemble_rt(std::vector<double> phase_values, std::vector<int> labels) -> Phase_trajectory;
auto assemble_rt(std::vector<double> phase_values, std::vector<int> changepoints, int horizon)
    -> Phase_trajectory;

// Daily R_t from continuous changepoints (day t takes r_{phase_of_day(t)}).
auto daily_rt_from_changepoints(std::span<const double> phase_values,
                                std::span<const double> changepoints, int horizon)
    -> std::vector<double>;

}  // namespace rtphase
