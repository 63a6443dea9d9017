#include "rtphase/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "rtphase/errors.hpp"
#include "rtphase/phase_models.hpp"
#include "rtphase/rng.hpp"

namespace rtphase {

auto Scenario_config::validate() const -> void {
  if (!(population_n >= 1.0)) {
    throw Domain_error{"scenario: population must be at least 1"};
  }
  if (horizon < 1) {
    throw Domain_error{"scenario: horizon must be at least 1 day"};
  }
  if (rt_schedule.horizon() != horizon) {
    throw Domain_error{fmt::format("scenario: R_t schedule covers {} days, horizon is {}",
                                   rt_schedule.horizon(), horizon)};
  }
  for (auto r : rt_schedule.daily()) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw Domain_error{"scenario: R_t values must be finite and non-negative"};
    }
  }
  if (!(ifr >= 0.0 && ifr <= 1.0)) {
    throw Domain_error{fmt::format("scenario: IFR {} outside [0, 1]", ifr)};
  }
  if (!(dispersion_k > 0.0)) {
    throw Domain_error{"scenario: dispersion k must be positive"};
  }
  if (gi.max_lag() == 0 || pi.max_lag() == 0) {
    throw Domain_error{"scenario: generation and death intervals are required"};
  }
  if (std::ssize(seed_infections) > horizon) {
    throw Domain_error{"scenario: seeding window longer than horizon"};
  }
  auto seeded = 0.0;
  for (auto s : seed_infections) {
    if (!(s >= 0.0)) {
      throw Domain_error{"scenario: seed infections must be non-negative"};
    }
    seeded += s;
  }
  if (seeded > population_n) {
    throw Domain_error{"scenario: seeds exceed the population"};
  }
}

auto five_phase_scenario(std::uint64_t rng_seed) -> Scenario_config {
  auto config = Scenario_config{};
  config.population_n = 1e8;
  config.horizon = 250;
  config.ifr = 0.02;
  config.rt_schedule = assemble_rt({1.5, 0.95, 1.35, 0.8, 1.8}, {60, 100, 150, 200}, 250);
  config.gi = discretize_gamma(6.5, 4.4);
  config.pi = discretize_gamma(19.0, 8.5);
  config.rng_seed = rng_seed;
  return config;
}

auto simulate(const Scenario_config& config) -> Epidemic_state {
  config.validate();
  auto rng = make_stream(config.rng_seed);
  auto n_days = config.horizon;
  auto state = Epidemic_state{};
  state.population_n = config.population_n;
  state.infections.assign(n_days, 0.0);
  state.susceptible.assign(n_days, 0.0);
  state.deaths.assign(n_days, 0.0);

  auto remaining = config.population_n;
  auto seed_days = std::ssize(config.seed_infections);
  for (auto t = 1; t <= seed_days; ++t) {
    auto c = std::min(std::round(config.seed_infections[t - 1]), remaining);
    state.infections[t - 1] = c;
    remaining -= c;
    state.susceptible[t - 1] = remaining;
  }

  if (seed_days == 0) {
    state.susceptible[0] = remaining;  // day 1 starts empty
  }

  auto rt = config.rt_schedule.daily();
  for (auto t = std::max<std::ptrdiff_t>(seed_days, 1); t < n_days; ++t) {
    auto mean = renewal_expectation(state, rt, config.gi, static_cast<int>(t));
    auto drawn = static_cast<double>(draw_negbin(rng, mean, config.dispersion_k));
    auto c = std::min(drawn, remaining);
    state.infections[t] = c;
    remaining -= c;
    state.susceptible[t] = remaining;
  }
  for (auto t = 1; t <= n_days; ++t) {
    auto mean = death_expectation(state.infections, config.ifr, config.pi, t);
    state.deaths[t - 1] = static_cast<double>(draw_negbin(rng, mean, config.dispersion_k));
  }
  return state;
}

auto replicate_study(const Scenario_config& config, int n_replicates, int jobs)
    -> std::vector<Epidemic_state> {
  if (n_replicates < 1) {
    throw Domain_error{"replicate_study needs at least one replicate"};
  }
  auto results = std::vector<Epidemic_state>(static_cast<std::size_t>(n_replicates));
  auto next = std::atomic<int>{0};
  auto worker = [&] {
    for (auto i = next++; i < n_replicates; i = next++) {
      auto replicate_config = config;
      replicate_config.rng_seed = config.rng_seed + static_cast<std::uint64_t>(i);
      results[i] = simulate(replicate_config);
    }
  };
  auto n_threads = std::clamp(jobs, 1, n_replicates);
  auto threads = std::vector<std::jthread>{};
  for (auto i = 1; i < n_threads; ++i) {
    threads.emplace_back(worker);
  }
  worker();
  return results;
}

}  // namespace rtphase
