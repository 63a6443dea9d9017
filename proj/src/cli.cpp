#include "rtphase/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "rtphase/config.hpp"
#include "rtphase/data_io.hpp"
#include "rtphase/diagnostics.hpp"
#include "rtphase/errors.hpp"
#include "rtphase/manifest.hpp"
#include "rtphase/model_selection.hpp"
#include "rtphase/sampler.hpp"
#include "rtphase/simulator.hpp"

namespace rtphase {

namespace fs = std::filesystem;

namespace {

struct Common_options {
  fs::path out_dir;
  int jobs = 1;
};

struct Simulate_options {
  fs::path config;
  int replicates = 1;
};

struct Fit_options {
  fs::path data;
  fs::path config;
  std::string model;
  bool paper_scale = false;
  std::optional<int> lead_days;
  std::optional<int> chains;
  std::optional<int> iterations;
  std::optional<std::uint64_t> seed;
  bool cumulative = false;
};

struct Select_options {
  std::vector<fs::path> runs;
};

struct Report_options {
  fs::path run;
};

struct Replay_options {
  fs::path manifest;
};

class Stopwatch {
 public:
  auto seconds() const -> double {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

auto require_file(const fs::path& path, std::string_view what) -> void {
  if (!fs::is_regular_file(path)) {
    throw Parse_error{fmt::format("{} '{}' does not exist", what, path.string()), 0};
  }
}

auto band_row(const std::string& day, const std::string& label, const Band& b)
    -> std::vector<std::string> {
  return {day,
          label,
          format_number(b.median),
          format_number(b.lower50),
          format_number(b.upper50),
          format_number(b.lower95),
          format_number(b.upper95)};
}

auto plain_csv(const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows) -> std::string {
  auto text = fmt::format("{}\n", fmt::join(columns, ","));
  for (const auto& r : rows) {
    text += fmt::format("{}\n", fmt::join(r, ","));
  }
  return text;
}

// ---- simulate ------------------------------------------------------------------------------

auto write_simulation(const fs::path& path, const Epidemic_state& state) -> void {
  auto rows = std::vector<std::vector<std::string>>{};
  for (auto t = 0; t < state.days(); ++t) {
    rows.push_back({std::to_string(t + 1), format_number(state.infections[t]),
                    format_number(state.deaths[t])});
  }
  write_text_atomic(path, plain_csv({"date_index", "infections", "deaths"}, rows));
}

auto write_truth(const fs::path& path, const Scenario_config& config,
                 const Epidemic_state& state) -> void {
  auto rows = std::vector<std::vector<std::string>>{};
  for (auto t = 0; t < state.days(); ++t) {
    auto rt = config.rt_schedule.daily()[t];
    rows.push_back({std::to_string(t + 1), format_number(rt),
                    format_number(effective_r(rt, state.susceptible[t], config.population_n)),
                    format_number(state.susceptible[t])});
  }
  write_text_atomic(path, plain_csv({"date_index", "rt", "re", "susceptible"}, rows));
}

auto cmd_simulate(const Simulate_options& opt, const Common_options& common,
                  Run_manifest& manifest, std::ostream& out) -> void {
  require_file(opt.config, "scenario config");
  auto config = load_scenario_config(opt.config);
  if (opt.replicates < 1) {
    throw Domain_error{"--replicates must be at least 1"};
  }
  fs::create_directories(common.out_dir);
  manifest.input_digests[opt.config.string()] = sha256_file(opt.config);
  manifest.resolved_config = scenario_to_json(config);
  auto states = replicate_study(config, opt.replicates, common.jobs);
  for (auto i = 0; i < opt.replicates; ++i) {
    auto suffix = opt.replicates == 1 ? std::string{} : fmt::format("_{}", i);
    auto series = fmt::format("series{}.csv", suffix);
    auto truth = fmt::format("truth{}.csv", suffix);
    write_simulation(common.out_dir / series, states[i]);
    write_truth(common.out_dir / truth, config, states[i]);
    manifest.artifacts.push_back(series);
    manifest.artifacts.push_back(truth);
    manifest.seeds.push_back(config.rng_seed + i);
  }
  write_text_atomic(common.out_dir / "scenario.json", manifest.resolved_config.dump(2) + "\n");
  manifest.artifacts.push_back("scenario.json");
  out << fmt::format("simulated {} replicate(s) of {} days into {}\n", opt.replicates,
                     config.horizon, common.out_dir.string());
}

// ---- fit -----------------------------------------------------------------------------------

struct Prepared_data {
  Observation_data data;
  Region_series series;  // model time axis
  int start_index = 0;   // first scored row within `series`
};

auto prepare_data(const Fit_options& opt, const Study_config& study, std::ostream& err)
    -> Prepared_data {
  auto parse = Parse_options{};
  parse.cumulative = study.cumulative || opt.cumulative;
  parse.region = study.region;
  parse.population_n = study.population_n;
  auto parsed = parse_series_file(opt.data, parse);
  for (const auto& w : parsed.warnings) {
    err << "warning: " << w << '\n';
  }
  auto series = parsed.series;
  if (study.horizon_end) {
    auto end = -1;
    for (auto i = 0; i < series.days(); ++i) {
      if (series.label(i) == *study.horizon_end) {
        end = i + 1;
      }
    }
    if (end < 0) {
      throw Domain_error{fmt::format("horizon end '{}' is not a day of the series",
                                     *study.horizon_end)};
    }
    series = slice_series(series, 0, end);
  }
  auto start = find_start_index(series, study.regime, study.start_threshold);
  auto lead = opt.lead_days ? opt.lead_days : study.lead_days;
  auto begin = lead ? std::max(0, start - *lead) : 0;
  series = slice_series(series, begin, series.days());

  auto prepared = Prepared_data{};
  prepared.start_index = start - begin;
  auto& data = prepared.data;
  data.regime = study.regime;
  data.counts = series.column(study.regime);
  data.first_scored_day = prepared.start_index + 1;
  data.population_n = study.population_n;
  data.gi = discretize_gamma(study.generation_interval.mean, study.generation_interval.sd);
  data.seed_days = study.seed_days;
  if (study.regime == Regime::deaths) {
    data.pi = discretize_gamma(study.death_delay.mean, study.death_delay.sd);
    data.ifr = study.ifr.resolve(series);
  }
  data.validate();
  prepared.series = std::move(series);
  return prepared;
}

auto fit_info_json(const Posterior_draws& draws, const Prepared_data& prepared,
                   const Diagnostics_report* report) -> Json {
  auto labels = std::vector<std::string>{};
  for (auto i = 0; i < prepared.series.days(); ++i) {
    labels.push_back(prepared.series.label(i));
  }
  auto flagged = report ? report->flagged_names() : std::vector<std::string>{};
  auto j = Json{};
  j["version"] = k_results_version;
  j["model"] = draws.model_id;
  j["regime"] = std::string{regime_name(draws.regime)};
  j["region"] = prepared.series.region;
  j["population_n"] = draws.population_n;
  j["horizon"] = draws.horizon;
  j["first_scored_day"] = draws.first_scored_day;
  j["n_observations"] = draws.horizon - draws.first_scored_day + 1;
  j["start_label"] = prepared.series.label(prepared.start_index);
  j["day_labels"] = labels;
  j["n_chains"] = draws.n_chains;
  j["n_draws"] = draws.n_draws();
  j["acceptance"] = draws.acceptance;
  j["occupied_mode"] = occupied_mode(draws);
  j["contiguity_fraction"] = contiguity_fraction(draws);
  j["rhat_flagged"] = flagged;
  return j;
}

auto cmd_fit(const Fit_options& opt, const Common_options& common, Run_manifest& manifest,
             std::ostream& out, std::ostream& err) -> void {
  require_file(opt.data, "data file");
  require_file(opt.config, "study config");
  auto study = load_study_config(opt.config);
  auto flag = Model_spec::parse(opt.model.empty() ? study.model : opt.model);
  auto prepared = prepare_data(opt, study, err);

  auto config = make_fit_config(study, flag);
  if (opt.paper_scale) {
    config.n_chains = 8;
    config.n_iterations = 100000;
  }
  if (opt.chains) {
    config.n_chains = *opt.chains;
  }
  if (opt.iterations) {
    config.n_iterations = *opt.iterations;
  }
  if (opt.seed) {
    config.rng_seed = *opt.seed;
  }
  config.jobs = common.jobs;

  fs::create_directories(common.out_dir);
  manifest.input_digests[opt.data.string()] = sha256_file(opt.data);
  manifest.input_digests[opt.config.string()] = sha256_file(opt.config);
  auto resolved = study_to_json(study);
  resolved["model"] = flag.id();
  resolved["sampler"]["n_chains"] = config.n_chains;
  resolved["sampler"]["n_iterations"] = config.n_iterations;
  resolved["sampler"]["rng_seed"] = config.rng_seed;
  resolved["lead_days"] = opt.lead_days ? Json(*opt.lead_days) : resolved["lead_days"];
  manifest.resolved_config = resolved;
  for (auto c = 0; c < config.n_chains; ++c) {
    manifest.seeds.push_back(config.rng_seed);
  }
  manifest.seeds.resize(1);

  auto draws = Posterior_draws{};
  try {
    draws = run_mcmc(prepared.data, config);
  } catch (const Sampler_failure& e) {
    auto report_path = common.out_dir / "failure_report.txt";
    write_text_atomic(report_path, fmt::format("{}\n\n{}", e.what(), e.snapshot()));
    manifest.artifacts.push_back("failure_report.txt");
    throw Sampler_failure{fmt::format("{} (report: {})", e.what(), report_path.string()),
                          e.snapshot()};
  }

  auto report = std::optional<Diagnostics_report>{};
  try {
    report = diagnostics(draws);
  } catch (const Domain_error& e) {
    err << "warning: convergence diagnostics skipped: " << e.what() << '\n';
  }
  write_results(common.out_dir, draws, report ? &*report : nullptr);
  manifest.artifacts.insert(manifest.artifacts.end(),
                            {"draws.csv", "summary.csv", "pointwise_loglik.csv"});
  if (report) {
    manifest.artifacts.push_back("diagnostics.csv");
  }

  auto occupied = Table{"occupied", {"phases", "probability"}, {}};
  for (const auto& o : occupied_distribution(draws)) {
    occupied.rows.push_back({std::to_string(o.phases), format_number(o.probability)});
  }
  write_table(common.out_dir / "occupied_phases.csv", occupied);
  manifest.artifacts.push_back("occupied_phases.csv");

  write_text_atomic(common.out_dir / "fit_info.json",
                    fit_info_json(draws, prepared, report ? &*report : nullptr).dump(2) + "\n");
  manifest.artifacts.push_back("fit_info.json");

  out << fmt::format("{} fit on {} {} days ({} scored): {} draws from {} chains\n", flag.id(),
                     prepared.data.horizon(), regime_name(prepared.data.regime),
                     prepared.data.scored_days(), draws.n_draws(), draws.n_chains);
  out << fmt::format("posterior mode of occupied phases: {}\n", occupied_mode(draws));
  if (report && report->any_flagged()) {
    err << fmt::format("warning: R-hat above {} for: {}\n", report->rhat_threshold,
                       fmt::join(report->flagged_names(), ", "));
  }
}

// ---- select --------------------------------------------------------------------------------

auto cmd_select(const Select_options& opt, const Common_options& common, Run_manifest& manifest,
                std::ostream& out) -> void {
  if (opt.runs.empty()) {
    throw Domain_error{"select needs at least one fitted run"};
  }
  auto results = std::vector<Model_result>{};
  auto regimes = std::set<std::string>{};
  auto run_regime = std::vector<std::string>{};
  auto days = std::optional<std::vector<int>>{};
  auto ids = std::vector<std::string>{};
  for (const auto& run : opt.runs) {
    auto info_path = run / "fit_info.json";
    auto pointwise_path = run / "pointwise_loglik.csv";
    if (!fs::is_regular_file(pointwise_path)) {
      throw Parse_error{fmt::format("run '{}' has no pointwise log-likelihood file ({})",
                                    run.string(), pointwise_path.string()),
                        0};
    }
    if (!fs::is_regular_file(info_path)) {
      throw Parse_error{fmt::format("run '{}' has no fit_info.json", run.string()), 0};
    }
    auto info = read_json(info_path);
    auto regime = info.at("regime").get<std::string>();
    regimes.insert(regime);
    run_regime.push_back(regime);
    if (regimes.size() > 1) {
      throw Domain_error{fmt::format(
          "runs mix observation regimes ({}); their likelihoods are not comparable",
          fmt::join(regimes, ", "))};
    }
    auto pointwise = read_pointwise(pointwise_path);
    manifest.input_digests[pointwise_path.string()] = sha256_file(pointwise_path);
    if (days && *days != pointwise.days) {
      throw Domain_error{fmt::format(
          "run '{}' scores a different set of observations than '{}'; criteria are not "
          "comparable",
          run.string(), opt.runs.front().string())};
    }
    days = pointwise.days;
    ids.push_back(info.at("model").get<std::string>());
    results.push_back({"", waic(pointwise.loglik), psis_loo(pointwise.loglik)});
  }
  for (auto i = std::size_t{0}; i != results.size(); ++i) {
    auto duplicate = std::count(ids.begin(), ids.end(), ids[i]) > 1;
    results[i].id = duplicate ? fmt::format("{}@{}", ids[i], opt.runs[i].string()) : ids[i];
  }
  auto ranking = rank_models(results);

  auto table = Table{"ranking",
                     {"rank", "model", "waic", "waic_se", "p_waic", "loo", "loo_se", "d_waic",
                      "d_waic_se", "d_loo", "indistinguishable", "pareto_k_unreliable"},
                     {}};
  auto text = std::string{};
  text += fmt::format("{:<4} {:<28} {:>12} {:>9} {:>9} {:>12} {:>9} {:>10} {:>9}  {}\n", "rank",
                      "model", "WAIC", "SE", "p_waic", "LOO", "SE", "dWAIC", "dSE", "flags");
  for (auto i = std::size_t{0}; i != ranking.rows.size(); ++i) {
    const auto& r = ranking.rows[i];
    table.rows.push_back({std::to_string(i + 1), r.id, format_number(r.waic),
                          format_number(r.waic_se), format_number(r.p_waic),
                          format_number(r.loo), format_number(r.loo_se), format_number(r.d_waic),
                          format_number(r.d_waic_se), format_number(r.d_loo),
                          r.indistinguishable ? "1" : "0", std::to_string(r.n_unreliable)});
    auto flags = std::string{};
    if (r.indistinguishable) {
      flags += "indistinguishable ";
    }
    if (r.n_unreliable > 0) {
      flags += fmt::format("pareto-k>0.7:{}", r.n_unreliable);
    }
    text += fmt::format("{:<4} {:<28} {:>12.2f} {:>9.2f} {:>9.2f} {:>12.2f} {:>9.2f} {:>10.2f} "
                        "{:>9.2f}  {}\n",
                        i + 1, r.id, r.waic, r.waic_se, r.p_waic, r.loo, r.loo_se, r.d_waic,
                        r.d_waic_se, flags);
  }
  text += fmt::format("\nwinner by WAIC: {}\nwinner by LOO:  {}\n", ranking.winner,
                      ranking.loo_winner);
  if (ranking.criteria_disagree) {
    text += "WARNING: WAIC and LOO disagree on the winner\n";
  }
  auto pairs = Table{"pairwise", {"better", "worse", "d_waic", "se", "indistinguishable"}, {}};
  for (const auto& p : ranking.pairs) {
    pairs.rows.push_back({p.better, p.worse, format_number(p.d_waic), format_number(p.se),
                          p.indistinguishable ? "1" : "0"});
  }
  fs::create_directories(common.out_dir);
  write_table(common.out_dir / "ranking.csv", table);
  write_table(common.out_dir / "pairwise.csv", pairs);
  write_text_atomic(common.out_dir / "ranking.txt", text);
  manifest.artifacts = {"ranking.csv", "pairwise.csv", "ranking.txt"};
  manifest.resolved_config = Json{{"runs", [&] {
                                     auto v = std::vector<std::string>{};
                                     for (const auto& r : opt.runs) {
                                       v.push_back(r.string());
                                     }
                                     return v;
                                   }()}};
  out << text;
}

// ---- report --------------------------------------------------------------------------------

auto cmd_report(const Report_options& opt, const Common_options& common, Run_manifest& manifest,
                std::ostream& out) -> void {
  auto summary_path = opt.run / "summary.csv";
  auto info_path = opt.run / "fit_info.json";
  require_file(summary_path, "summary file");
  require_file(info_path, "fit info file");
  auto summary = read_summary(summary_path);
  auto info = read_json(info_path);
  manifest.input_digests[summary_path.string()] = sha256_file(summary_path);
  manifest.input_digests[info_path.string()] = sha256_file(info_path);
  auto labels = info.at("day_labels").get<std::vector<std::string>>();
  auto population = info.at("population_n").get<double>();
  auto regime = parse_regime(info.at("regime").get<std::string>());

  auto find = [&](std::string_view quantity) -> const Daily_summary& {
    auto it = std::find_if(summary.begin(), summary.end(),
                           [&](const auto& s) { return s.quantity == quantity; });
    if (it == summary.end()) {
      throw Schema_error{fmt::format("summary has no '{}' rows", quantity)};
    }
    if (it->bands.size() != labels.size()) {
      throw Shape_error{fmt::format("summary '{}' has {} days, fit_info lists {}", quantity,
                                    it->bands.size(), labels.size())};
    }
    return *it;
  };
  auto columns =
      std::vector<std::string>{"day", "date", "median", "lower50", "upper50", "lower95", "upper95"};
  auto emit = [&](const std::string& file, const Daily_summary& s, double scale) {
    auto rows = std::vector<std::vector<std::string>>{};
    for (auto t = std::size_t{0}; t != s.bands.size(); ++t) {
      auto b = s.bands[t];
      b.median *= scale;
      b.lower50 *= scale;
      b.upper50 *= scale;
      b.lower95 *= scale;
      b.upper95 *= scale;
      rows.push_back(band_row(std::to_string(t + 1), labels[t], b));
    }
    write_text_atomic(common.out_dir / file, plain_csv(columns, rows));
    manifest.artifacts.push_back(file);
  };
  fs::create_directories(common.out_dir);
  emit("rt.csv", find("rt"), 1.0);
  emit("re.csv", find("re"), 1.0);
  emit("infections.csv", find("infections"), 1.0);
  emit(regime == Regime::deaths ? "deaths_fit.csv" : "cases_fit.csv", find("fitted"), 1.0);
  const auto& cumulative = find("cumulative_infections");
  emit("attack_rate.csv", cumulative, 1.0 / population);
  const auto& last = cumulative.bands.back();
  out << fmt::format("attack rate at {}: {:.2f}% (95% CrI {:.2f}% to {:.2f}%)\n", labels.back(),
                     100.0 * last.median / population, 100.0 * last.lower95 / population,
                     100.0 * last.upper95 / population);
}

auto dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
              int depth) -> int;

auto cmd_replay(const Replay_options& opt, const Common_options& common, std::ostream& out,
                std::ostream& err, int depth) -> int {
  if (depth > 0) {
    throw Domain_error{"a replay manifest cannot itself be a replay"};
  }
  require_file(opt.manifest, "manifest");
  auto manifest = read_manifest(opt.manifest);
  for (const auto& [path, digest] : manifest.input_digests) {
    if (!fs::is_regular_file(path)) {
      throw Parse_error{fmt::format("input '{}' recorded in the manifest is missing", path), 0};
    }
    if (sha256_file(path) != digest) {
      throw Domain_error{fmt::format("input '{}' changed since the recorded run", path)};
    }
  }
  auto args = manifest.arguments;
  if (!common.out_dir.empty()) {
    auto it = std::find(args.begin(), args.end(), "--out");
    if (it != args.end() && std::next(it) != args.end()) {
      *std::next(it) = common.out_dir.string();
    } else {
      args.push_back("--out");
      args.push_back(common.out_dir.string());
    }
  }
  out << fmt::format("replaying: rtphase {}\n", fmt::join(args, " "));
  return dispatch(args, out, err, depth + 1);
}

auto dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
              int depth) -> int {
  auto app = CLI::App{"Piecewise-constant R_t: simulation, inference and model selection",
                      "rtphase"};
  app.require_subcommand(1);
  app.set_version_flag("--version", k_tool_version);

  auto common = Common_options{};
  auto sim = Simulate_options{};
  auto fit = Fit_options{};
  auto sel = Select_options{};
  auto rep = Report_options{};
  auto replay = Replay_options{};

  auto* simulate_cmd = app.add_subcommand("simulate", "simulate a scenario");
  simulate_cmd->add_option("--config", sim.config, "scenario JSON")->required();
  simulate_cmd->add_option("--out", common.out_dir, "output directory")->required();
  simulate_cmd->add_option("--replicates", sim.replicates, "number of replicates");
  simulate_cmd->add_option("--jobs", common.jobs, "worker threads");

  auto* fit_cmd = app.add_subcommand("fit", "fit a phase model");
  fit_cmd->add_option("--data", fit.data, "daily series CSV")->required();
  fit_cmd->add_option("--config", fit.config, "study JSON")->required();
  fit_cmd->add_option("--model", fit.model, "fixedk:K, pp or dp (default: from config)");
  fit_cmd->add_option("--out", common.out_dir, "output directory")->required();
  fit_cmd->add_option("--jobs", common.jobs, "chains run in parallel");
  fit_cmd->add_flag("--paper-scale", fit.paper_scale, "8 chains x 100000 iterations");
  fit_cmd->add_option("--lead-days", fit.lead_days, "model days kept before the start day");
  fit_cmd->add_option("--chains", fit.chains, "number of chains");
  fit_cmd->add_option("--iterations", fit.iterations, "iterations per chain");
  fit_cmd->add_option("--seed", fit.seed, "random seed");
  fit_cmd->add_flag("--cumulative", fit.cumulative, "input counts are cumulative");

  auto* select_cmd = app.add_subcommand("select", "rank fitted runs by WAIC and PSIS-LOO");
  select_cmd->add_option("runs", sel.runs, "fit output directories")->required();
  select_cmd->add_option("--out", common.out_dir, "output directory")->required();

  auto* report_cmd = app.add_subcommand("report", "plot-ready CSVs from a fit");
  report_cmd->add_option("run", rep.run, "fit output directory")->required();
  report_cmd->add_option("--out", common.out_dir, "output directory (default: <run>/report)");

  auto* replay_cmd = app.add_subcommand("replay", "re-run a command from its manifest");
  replay_cmd->add_option("manifest", replay.manifest, "manifest.json")->required();
  replay_cmd->add_option("--out", common.out_dir, "output directory (default: as recorded)");

  try {
    auto reversed = std::vector<std::string>(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::CallForVersion&) {
    out << k_tool_version << '\n';
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_user_error;
  }
  if (common.jobs < 1) {
    err << "error: --jobs must be at least 1\n";
    return exit_user_error;
  }

  if (replay_cmd->parsed()) {
    return cmd_replay(replay, common, out, err, depth);
  }

  auto clock = Stopwatch{};
  auto manifest = Run_manifest{};
  manifest.arguments = args;
  manifest.started_utc = utc_timestamp();
  if (simulate_cmd->parsed()) {
    manifest.command = "simulate";
    cmd_simulate(sim, common, manifest, out);
  } else if (fit_cmd->parsed()) {
    manifest.command = "fit";
    cmd_fit(fit, common, manifest, out, err);
  } else if (select_cmd->parsed()) {
    manifest.command = "select";
    cmd_select(sel, common, manifest, out);
  } else if (report_cmd->parsed()) {
    manifest.command = "report";
    if (common.out_dir.empty()) {
      common.out_dir = rep.run / "report";
    }
    cmd_report(rep, common, manifest, out);
  }
  manifest.wall_seconds = clock.seconds();
  write_manifest(common.out_dir, manifest);
  return exit_ok;
}

}  // namespace

auto run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) -> int {
  try {
    return dispatch(args, out, err, 0);
  } catch (const Sampler_failure& e) {
    err << "error: sampler failure: " << e.what() << '\n';
    return exit_runtime_failure;
  } catch (const Parse_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_user_error;
  } catch (const Schema_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_user_error;
  } catch (const Truncation_overflow& e) {
    err << "error: " << e.what() << '\n';
    return exit_user_error;
  } catch (const Fit_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_user_error;
  } catch (const std::logic_error& e) {
    // Domain_error, Shape_error, Out_of_range_error
    err << "error: " << e.what() << '\n';
    return exit_user_error;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_user_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_runtime_failure;
  }
}

}  // namespace rtphase
