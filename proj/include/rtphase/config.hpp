#pragma once

// JSON configuration files for scenarios (simulate) and studies (fit).

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rtphase/data_io.hpp"
#include "rtphase/sampler.hpp"
#include "rtphase/simulator.hpp"

namespace rtphase {

using Json = nlohmann::ordered_json;

struct Interval_spec {
  double mean = 0.0;
  double sd = 0.0;
};

// One constant IFR over an inclusive range of dates (YYYY-MM-DD) or day numbers. Open ends
// extend to the edge of the series.
struct Ifr_piece {
  std::optional<std::string> from;
  std::optional<std::string> to;
  double value = 0.0;
};

struct Ifr_spec {
  std::optional<double> scalar;
  std::vector<Ifr_piece> pieces;

  // IFR for each row of `series`; throws Domain_error naming the first uncovered day.
  auto resolve(const Region_series& series) const -> std::vector<double>;
};

struct Study_config {
  Regime regime = Regime::deaths;
  Ifr_spec ifr;
  Interval_spec generation_interval{6.5, 4.4};
  Interval_spec death_delay{19.0, 8.5};
  double population_n = 0.0;
  std::string region;
  bool cumulative = false;
  double start_threshold = 10.0;
  std::optional<int> lead_days;           // model days kept before the start day
  std::optional<std::string> horizon_end;  // last date (or day number) used
  int seed_days = 6;
  std::string model = "dp";

  Phase_value_prior r_prior;
  Fixed_k_prior fixed_k;
  Pp_prior pp;
  Dp_prior dp;

  int n_chains = 4;
  int n_iterations = 20000;
  double warmup_fraction = 0.5;
  std::uint64_t rng_seed = 1;
  int max_draws_per_chain = 1000;
  double dispersion_prior_mean = 5.0;
  std::optional<double> fixed_dispersion;
  double seed_prior_mean = 100.0;
  double target_acceptance = 0.23;

  auto validate() const -> void;
};

auto study_from_json(const Json& j) -> Study_config;
auto study_to_json(const Study_config& config) -> Json;
auto load_study_config(const std::filesystem::path& path) -> Study_config;

auto scenario_from_json(const Json& j) -> Scenario_config;
auto scenario_to_json(const Scenario_config& config) -> Json;
auto load_scenario_config(const std::filesystem::path& path) -> Scenario_config;

auto read_json(const std::filesystem::path& path) -> Json;

// Model priors from the study with the phase structure of `flag`.
auto make_fit_config(const Study_config& study, const Model_spec& flag) -> Fit_config;

}  // namespace rtphase
