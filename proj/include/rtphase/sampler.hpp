#pragma once

// Adaptive random-walk Metropolis-within-Gibbs for piecewise-constant R_t under the three
// phase priors.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtphase/likelihood.hpp"
#include "rtphase/phase_models.hpp"
#include "rtphase/posterior.hpp"

namespace rtphase {

enum class Model_kind { fixed_k, pp, dp };

struct Model_spec {
  Model_kind kind = Model_kind::fixed_k;
  Fixed_k_prior fixed_k;
  Pp_prior pp;
  Dp_prior dp;

  // "fixedk:K", "pp" or "dp".
  static auto parse(std::string_view flag) -> Model_spec;
  auto id() const -> std::string;
};

struct Adaptation_settings {
  double target_acceptance = 0.23;
  double initial_scale = 0.1;
};

struct Fit_config {
  Model_spec model;
  int n_chains = 4;
  int n_iterations = 20000;
  double warmup_fraction = 0.5;
  double start_threshold = 10.0;
  std::uint64_t rng_seed = 1;
  Adaptation_settings adaptation;
  int max_draws_per_chain = 1000;
  double dispersion_prior_mean = 5.0;
  std::optional<double> fixed_dispersion;
  double seed_prior_mean = 100.0;
  bool prior_only = false;
  int jobs = 1;

  auto validate() const -> void;
};

auto run_mcmc(const Observation_data& data, const Fit_config& config) -> Posterior_draws;

// One ascending sweep: z_t drawn from its full conditional, proportional to
// exp(log_weights[j]) times the likelihood with day t set to phase_values[j]. The likelihood
// must hold R_t = phase_values[labels[t]] on entry and is kept in step.
auto gibbs_update_labels(std::vector<int>& labels, std::span<const double> phase_values,
                         std::span<const double> log_weights, Trajectory_likelihood& likelihood,
                         Random_stream& rng) -> void;

// Crude moving-window R_t estimate from the observed series, used to start chains.
auto crude_rt(const Observation_data& data, int half_window = 7) -> std::vector<double>;

}  // namespace rtphase
