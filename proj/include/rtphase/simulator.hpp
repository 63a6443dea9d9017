#pragma once

#include <cstdint>
#include <vector>

#include "rtphase/epi_core.hpp"
#include "rtphase/phase_trajectory.hpp"

namespace rtphase {

struct Scenario_config {
  double population_n = 1e8;
  int horizon = 250;
  Phase_trajectory rt_schedule;
  double ifr = 0.02;
  double dispersion_k = 1000.0;
  Discretized_interval gi;
  Discretized_interval pi;
  std::vector<double> seed_infections = std::vector<double>(6, 10.0);
  std::uint64_t rng_seed = 1;

  // Throws Domain_error describing the first violated constraint.
  auto validate() const -> void;
};

// Five-phase benchmark: n = 1e8, IFR 2%, 250 days, R_t = 1.5/0.95/1.35/0.8/1.8 switching
// after days 60/100/150/200, gamma generation interval (6.5, 4.4) and infection-to-death
// delay (19, 8.5).
auto five_phase_scenario(std::uint64_t rng_seed = 1) -> Scenario_config;

// Seeds days 1..W, then draws c_{t+1} ~ NB(E[c_{t+1}], k) capped at S_t for t = W..T-1, then
// d_t ~ NB(E[d_t], k) for every day. Bit-reproducible for a given config.
auto simulate(const Scenario_config& config) -> Epidemic_state;

// Replicate i runs `simulate` with rng_seed + i, so replicate 0 equals simulate(config).
// Replicates are spread over up to `jobs` threads.
auto replicate_study(const Scenario_config& config, int n_replicates, int jobs = 1)
    -> std::vector<Epidemic_state>;

}  // namespace rtphase
