#include "rtphase/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "rtphase/errors.hpp"

namespace rtphase {

namespace {

auto check_keys(const Json& j, std::string_view where, std::set<std::string> allowed) -> void {
  if (!j.is_object()) {
    throw Domain_error{fmt::format("{} must be a JSON object", where)};
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw Domain_error{fmt::format("unknown key '{}' in {}", key, where)};
    }
  }
}

template <typename T>
auto get_or(const Json& j, const char* key, T fallback) -> T {
  if (!j.contains(key) || j.at(key).is_null()) {
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Domain_error{fmt::format("config key '{}': {}", key, e.what())};
  }
}

template <typename T>
auto get_optional(const Json& j, const char* key) -> std::optional<T> {
  if (!j.contains(key) || j.at(key).is_null()) {
    return std::nullopt;
  }
  return get_or<T>(j, key, T{});
}

auto interval_from_json(const Json& j, const char* key, Interval_spec fallback) -> Interval_spec {
  if (!j.contains(key)) {
    return fallback;
  }
  const auto& v = j.at(key);
  check_keys(v, key, {"mean", "sd"});
  return {get_or<double>(v, "mean", fallback.mean), get_or<double>(v, "sd", fallback.sd)};
}

auto interval_to_json(const Interval_spec& spec) -> Json {
  return Json{{"mean", spec.mean}, {"sd", spec.sd}};
}

auto bound_to_string(const Json& v) -> std::string {
  if (v.is_string()) {
    return v.get<std::string>();
  }
  if (v.is_number_integer()) {
    return std::to_string(v.get<long>());
  }
  throw Domain_error{"IFR range bounds must be dates (YYYY-MM-DD) or day numbers"};
}

auto as_integer(std::string_view s) -> std::optional<long> {
  auto value = 0L;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    return std::nullopt;
  }
  return value;
}

// -1, 0, 1 comparing a day key with a range bound of the same kind
auto compare_day(const std::string& key, const std::string& bound) -> int {
  auto a = as_integer(key);
  auto b = as_integer(bound);
  if (a.has_value() != b.has_value()) {
    throw Domain_error{fmt::format(
        "IFR range bound '{}' does not match the series' day labels (e.g. '{}')", bound, key)};
  }
  if (a) {
    return *a < *b ? -1 : (*a > *b ? 1 : 0);
  }
  return key < bound ? -1 : (key > bound ? 1 : 0);
}

auto optional_number(const std::optional<double>& v) -> Json {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

auto Ifr_spec::resolve(const Region_series& series) const -> std::vector<double> {
  auto n = series.days();
  if (scalar) {
    return std::vector<double>(static_cast<std::size_t>(n), *scalar);
  }
  if (pieces.empty()) {
    throw Domain_error{"no IFR configured"};
  }
  auto path = std::vector<double>(static_cast<std::size_t>(n));
  for (auto i = 0; i < n; ++i) {
    auto key = series.label(i);
    auto found = false;
    for (const auto& p : pieces) {
      if ((!p.from || compare_day(key, *p.from) >= 0) && (!p.to || compare_day(key, *p.to) <= 0)) {
        path[i] = p.value;
        found = true;
        break;
      }
    }
    if (!found) {
      throw Domain_error{fmt::format("no IFR range covers day {}", key)};
    }
  }
  return path;
}

auto Study_config::validate() const -> void {
  auto positive = [](double v, std::string_view what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Domain_error{fmt::format("{} must be positive, got {}", what, v)};
    }
  };
  auto proportion = [](double v) {
    if (!(v > 0.0 && v < 1.0)) {
      throw Domain_error{fmt::format("IFR {} outside (0, 1)", v)};
    }
  };
  positive(population_n, "population_n");
  positive(generation_interval.mean, "generation interval mean");
  positive(generation_interval.sd, "generation interval sd");
  if (regime == Regime::deaths) {
    positive(death_delay.mean, "infection-to-death mean");
    positive(death_delay.sd, "infection-to-death sd");
    if (!ifr.scalar && ifr.pieces.empty()) {
      throw Domain_error{"the deaths regime needs an IFR"};
    }
  }
  if (ifr.scalar) {
    proportion(*ifr.scalar);
  }
  for (const auto& p : ifr.pieces) {
    proportion(p.value);
  }
  if (start_threshold < 0.0) {
    throw Domain_error{"start_threshold must be non-negative"};
  }
  if (lead_days && *lead_days < 0) {
    throw Domain_error{"lead_days must be non-negative"};
  }
  if (seed_days < 0) {
    throw Domain_error{"seed_days must be non-negative"};
  }
  positive(r_prior.log_sd, "r prior log sd");
  positive(dispersion_prior_mean, "dispersion prior mean");
  positive(seed_prior_mean, "seed prior mean");
}

auto study_from_json(const Json& j) -> Study_config {
  check_keys(j, "study config",
             {"regime", "region", "population_n", "ifr", "generation_interval", "death_delay",
              "cumulative", "start_threshold", "lead_days", "horizon_end", "seed_days", "model",
              "priors", "sampler"});
  auto c = Study_config{};
  c.regime = parse_regime(get_or<std::string>(j, "regime", "deaths"));
  c.region = get_or<std::string>(j, "region", "");
  c.population_n = get_or<double>(j, "population_n", 0.0);
  if (j.contains("ifr")) {
    const auto& ifr = j.at("ifr");
    if (ifr.is_number()) {
      c.ifr.scalar = ifr.get<double>();
    } else if (ifr.is_array()) {
      for (const auto& piece : ifr) {
        check_keys(piece, "ifr range", {"from", "to", "value"});
        auto p = Ifr_piece{};
        if (piece.contains("from") && !piece.at("from").is_null()) {
          p.from = bound_to_string(piece.at("from"));
        }
        if (piece.contains("to") && !piece.at("to").is_null()) {
          p.to = bound_to_string(piece.at("to"));
        }
        if (!piece.contains("value")) {
          throw Domain_error{"every IFR range needs a value"};
        }
        p.value = get_or<double>(piece, "value", 0.0);
        c.ifr.pieces.push_back(p);
      }
    } else {
      throw Domain_error{"ifr must be a number or a list of ranges"};
    }
  }
  c.generation_interval = interval_from_json(j, "generation_interval", c.generation_interval);
  c.death_delay = interval_from_json(j, "death_delay", c.death_delay);
  c.cumulative = get_or<bool>(j, "cumulative", false);
  c.start_threshold = get_or<double>(j, "start_threshold", c.start_threshold);
  c.lead_days = get_optional<int>(j, "lead_days");
  if (j.contains("horizon_end") && !j.at("horizon_end").is_null()) {
    c.horizon_end = bound_to_string(j.at("horizon_end"));
  }
  c.seed_days = get_or<int>(j, "seed_days", c.seed_days);
  c.model = get_or<std::string>(j, "model", c.model);

  if (j.contains("priors")) {
    const auto& p = j.at("priors");
    check_keys(p, "priors",
               {"r_log_mean", "r_log_sd", "t1_lower", "gap_upper", "lambda_shape", "lambda_rate",
                "fixed_lambda", "k_max", "theta_shape", "theta_rate", "fixed_theta",
                "truncation", "dispersion_mean", "fixed_dispersion", "seed_mean"});
    c.r_prior.log_mean = get_or<double>(p, "r_log_mean", c.r_prior.log_mean);
    c.r_prior.log_sd = get_or<double>(p, "r_log_sd", c.r_prior.log_sd);
    c.fixed_k.t1_lower = get_or<double>(p, "t1_lower", c.fixed_k.t1_lower);
    c.fixed_k.gap_upper = get_or<double>(p, "gap_upper", c.fixed_k.gap_upper);
    c.pp.lambda_shape = get_or<double>(p, "lambda_shape", c.pp.lambda_shape);
    c.pp.lambda_rate = get_or<double>(p, "lambda_rate", c.pp.lambda_rate);
    c.pp.fixed_lambda = get_optional<double>(p, "fixed_lambda");
    c.pp.k_max = get_or<int>(p, "k_max", c.pp.k_max);
    c.dp.theta_shape = get_or<double>(p, "theta_shape", c.dp.theta_shape);
    c.dp.theta_rate = get_or<double>(p, "theta_rate", c.dp.theta_rate);
    c.dp.fixed_theta = get_optional<double>(p, "fixed_theta");
    c.dp.truncation = get_or<int>(p, "truncation", c.dp.truncation);
    c.dispersion_prior_mean = get_or<double>(p, "dispersion_mean", c.dispersion_prior_mean);
    c.fixed_dispersion = get_optional<double>(p, "fixed_dispersion");
    c.seed_prior_mean = get_or<double>(p, "seed_mean", c.seed_prior_mean);
  }
  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    check_keys(s, "sampler",
               {"n_chains", "n_iterations", "warmup_fraction", "rng_seed", "max_draws_per_chain",
                "target_acceptance"});
    c.n_chains = get_or<int>(s, "n_chains", c.n_chains);
    c.n_iterations = get_or<int>(s, "n_iterations", c.n_iterations);
    c.warmup_fraction = get_or<double>(s, "warmup_fraction", c.warmup_fraction);
    c.rng_seed = get_or<std::uint64_t>(s, "rng_seed", c.rng_seed);
    c.max_draws_per_chain = get_or<int>(s, "max_draws_per_chain", c.max_draws_per_chain);
    c.target_acceptance = get_or<double>(s, "target_acceptance", c.target_acceptance);
  }
  c.validate();
  return c;
}

auto study_to_json(const Study_config& c) -> Json {
  auto j = Json{};
  j["regime"] = std::string{regime_name(c.regime)};
  j["region"] = c.region;
  j["population_n"] = c.population_n;
  if (c.ifr.scalar) {
    j["ifr"] = *c.ifr.scalar;
  } else {
    auto pieces = Json::array();
    for (const auto& p : c.ifr.pieces) {
      pieces.push_back(Json{{"from", p.from ? Json(*p.from) : Json(nullptr)},
                            {"to", p.to ? Json(*p.to) : Json(nullptr)},
                            {"value", p.value}});
    }
    j["ifr"] = pieces;
  }
  j["generation_interval"] = interval_to_json(c.generation_interval);
  j["death_delay"] = interval_to_json(c.death_delay);
  j["cumulative"] = c.cumulative;
  j["start_threshold"] = c.start_threshold;
  j["lead_days"] = c.lead_days ? Json(*c.lead_days) : Json(nullptr);
  j["horizon_end"] = c.horizon_end ? Json(*c.horizon_end) : Json(nullptr);
  j["seed_days"] = c.seed_days;
  j["model"] = c.model;
  j["priors"] = Json{{"r_log_mean", c.r_prior.log_mean},
                     {"r_log_sd", c.r_prior.log_sd},
                     {"t1_lower", c.fixed_k.t1_lower},
                     {"gap_upper", c.fixed_k.gap_upper},
                     {"lambda_shape", c.pp.lambda_shape},
                     {"lambda_rate", c.pp.lambda_rate},
                     {"fixed_lambda", optional_number(c.pp.fixed_lambda)},
                     {"k_max", c.pp.k_max},
                     {"theta_shape", c.dp.theta_shape},
                     {"theta_rate", c.dp.theta_rate},
                     {"fixed_theta", optional_number(c.dp.fixed_theta)},
                     {"truncation", c.dp.truncation},
                     {"dispersion_mean", c.dispersion_prior_mean},
                     {"fixed_dispersion", optional_number(c.fixed_dispersion)},
                     {"seed_mean", c.seed_prior_mean}};
  j["sampler"] = Json{{"n_chains", c.n_chains},
                      {"n_iterations", c.n_iterations},
                      {"warmup_fraction", c.warmup_fraction},
                      {"rng_seed", c.rng_seed},
                      {"max_draws_per_chain", c.max_draws_per_chain},
                      {"target_acceptance", c.target_acceptance}};
  return j;
}

auto read_json(const std::filesystem::path& path) -> Json {
  auto in = std::ifstream{path};
  if (!in) {
    throw Parse_error{fmt::format("cannot open {}", path.string()), 0};
  }
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Parse_error{fmt::format("{}: {}", path.string(), e.what()), 0};
  }
}

auto load_study_config(const std::filesystem::path& path) -> Study_config {
  return study_from_json(read_json(path));
}

auto scenario_from_json(const Json& j) -> Scenario_config {
  check_keys(j, "scenario config",
             {"population_n", "horizon", "ifr", "dispersion_k", "rt", "generation_interval",
              "death_delay", "seed_infections", "rng_seed"});
  auto c = Scenario_config{};
  c.population_n = get_or<double>(j, "population_n", c.population_n);
  c.horizon = get_or<int>(j, "horizon", c.horizon);
  c.ifr = get_or<double>(j, "ifr", c.ifr);
  if (j.contains("dispersion_k") && j.at("dispersion_k").is_string()) {
    if (j.at("dispersion_k").get<std::string>() != "inf") {
      throw Domain_error{"dispersion_k must be a number or \"inf\""};
    }
    c.dispersion_k = std::numeric_limits<double>::infinity();
  } else {
    c.dispersion_k = get_or<double>(j, "dispersion_k", c.dispersion_k);
  }
  if (!j.contains("rt")) {
    throw Domain_error{"scenario needs an 'rt' schedule"};
  }
  const auto& rt = j.at("rt");
  check_keys(rt, "rt", {"values", "changepoints"});
  auto values = get_or<std::vector<double>>(rt, "values", {});
  auto cps = get_or<std::vector<int>>(rt, "changepoints", {});
  c.rt_schedule = Phase_trajectory::from_changepoints(values, cps, c.horizon);
  auto gi = interval_from_json(j, "generation_interval", {6.5, 4.4});
  auto pi = interval_from_json(j, "death_delay", {19.0, 8.5});
  c.gi = discretize_gamma(gi.mean, gi.sd);
  c.pi = discretize_gamma(pi.mean, pi.sd);
  c.seed_infections = get_or<std::vector<double>>(j, "seed_infections", c.seed_infections);
  c.rng_seed = get_or<std::uint64_t>(j, "rng_seed", c.rng_seed);
  c.validate();
  return c;
}

auto scenario_to_json(const Scenario_config& c) -> Json {
  auto values = c.rt_schedule.phase_values();
  auto j = Json{};
  j["population_n"] = c.population_n;
  j["horizon"] = c.horizon;
  j["ifr"] = c.ifr;
  j["dispersion_k"] = std::isfinite(c.dispersion_k) ? Json(c.dispersion_k) : Json("inf");
  j["rt"] = Json{{"values", std::vector<double>(values.begin(), values.end())},
                 {"changepoints", c.rt_schedule.changepoints()}};
  j["generation_interval"] = interval_to_json({c.gi.mean_days(), c.gi.sd_days()});
  j["death_delay"] = interval_to_json({c.pi.mean_days(), c.pi.sd_days()});
  j["seed_infections"] = c.seed_infections;
  j["rng_seed"] = c.rng_seed;
  return j;
}

auto load_scenario_config(const std::filesystem::path& path) -> Scenario_config {
  return scenario_from_json(read_json(path));
}

auto make_fit_config(const Study_config& study, const Model_spec& flag) -> Fit_config {
  auto config = Fit_config{};
  config.model = flag;
  config.model.fixed_k.t1_lower = study.fixed_k.t1_lower;
  config.model.fixed_k.gap_upper = study.fixed_k.gap_upper;
  config.model.fixed_k.r_prior = study.r_prior;
  config.model.pp = study.pp;
  config.model.pp.r_prior = study.r_prior;
  config.model.dp = study.dp;
  config.model.dp.r_prior = study.r_prior;
  config.n_chains = study.n_chains;
  config.n_iterations = study.n_iterations;
  config.warmup_fraction = study.warmup_fraction;
  config.start_threshold = study.start_threshold;
  config.rng_seed = study.rng_seed;
  config.adaptation.target_acceptance = study.target_acceptance;
  config.max_draws_per_chain = study.max_draws_per_chain;
  config.dispersion_prior_mean = study.dispersion_prior_mean;
  config.fixed_dispersion = study.fixed_dispersion;
  config.seed_prior_mean = study.seed_prior_mean;
  return config;
}

}  // namespace rtphase
