#include "rtphase/data_io.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include <fmt/format.h>

#include "rtphase/errors.hpp"

namespace rtphase {

namespace fs = std::filesystem;

namespace {

auto trim(std::string_view s) -> std::string_view {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) {
    s.remove_prefix(1);
  }
  while (!s.empty() && is_space(s.back())) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

auto split(std::string_view line) -> std::vector<std::string> {
  auto fields = std::vector<std::string>{};
  while (true) {
    auto comma = line.find(',');
    fields.emplace_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) {
      break;
    }
    line.remove_prefix(comma + 1);
  }
  return fields;
}

auto parse_date(std::string_view text) -> std::optional<std::chrono::sys_days> {
  auto y = 0;
  auto m = 0u;
  auto d = 0u;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    return std::nullopt;
  }
  auto ok = [](std::string_view part, auto& out) {
    auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    return ec == std::errc{} && end == part.data() + part.size();
  };
  if (!ok(text.substr(0, 4), y) || !ok(text.substr(5, 2), m) || !ok(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  auto ymd = std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d};
  if (!ymd.ok()) {
    return std::nullopt;
  }
  return std::chrono::sys_days{ymd};
}

auto parse_int(std::string_view text) -> std::optional<long> {
  auto value = 0L;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

auto band_columns() -> std::vector<std::string> {
  return {"median", "lower50", "upper50", "lower95", "upper95"};
}

auto table_lines(std::istream& in) {
  auto lines = std::vector<std::string>{};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

auto Region_series::days() const -> int {
  return static_cast<int>(std::max(deaths.size(), cases.size()));
}

auto Region_series::column(Regime regime) const -> const std::vector<double>& {
  const auto& c = regime == Regime::deaths ? deaths : cases;
  if (c.empty()) {
    throw Domain_error{fmt::format("series has no {} column",
                                   regime == Regime::deaths ? "deaths" : "cases")};
  }
  return c;
}

auto Region_series::label(int index) const -> std::string {
  if (!dates.empty()) {
    return dates.at(index);
  }
  return std::to_string(first_day + index);
}

auto parse_series(std::istream& in, const Parse_options& options) -> Parse_result {
  auto result = Parse_result{};
  auto& series = result.series;
  series.region = options.region;
  series.population_n = options.population_n;

  auto row = 0;
  auto header = std::vector<std::string>{};
  auto date_col = -1;
  auto index_col = -1;
  auto deaths_col = -1;
  auto cases_col = -1;
  auto previous_date = std::optional<std::chrono::sys_days>{};
  auto previous_index = std::optional<long>{};
  auto raw_deaths = std::vector<double>{};
  auto raw_cases = std::vector<double>{};
  auto rows = std::vector<int>{};

  for (std::string line; std::getline(in, line);) {
    ++row;
    auto view = trim(line);
    if (view.empty() || view.front() == '#') {
      continue;
    }
    auto fields = split(view);
    if (header.empty()) {
      header = fields;
      for (auto i = 0; i < std::ssize(header); ++i) {
        auto name = header[i];
        std::transform(name.begin(), name.end(), name.begin(), ::tolower);
        if (name == "date") {
          date_col = i;
        } else if (name == "date_index" || name == "day") {
          index_col = i;
        } else if (name == "deaths") {
          deaths_col = i;
        } else if (name == "cases" || name == "infections") {
          cases_col = i;
        }
      }
      if (date_col < 0 && index_col < 0) {
        throw Parse_error{"header needs a 'date' or 'date_index' column", row};
      }
      if (deaths_col < 0 && cases_col < 0) {
        throw Parse_error{"header needs a 'deaths', 'cases' or 'infections' column", row};
      }
      continue;
    }
    if (fields.size() != header.size()) {
      throw Parse_error{fmt::format("row {} has {} fields, header has {}", row, fields.size(),
                                    header.size()),
                        row};
    }
    if (date_col >= 0) {
      auto date = parse_date(fields[date_col]);
      if (!date) {
        throw Parse_error{
            fmt::format("row {}: '{}' is not a YYYY-MM-DD date", row, fields[date_col]), row};
      }
      if (previous_date && (*date - *previous_date).count() != 1) {
        throw Parse_error{fmt::format("row {}: date {} does not follow the previous row's date "
                                      "(dates must be consecutive days)",
                                      row, fields[date_col]),
                          row};
      }
      previous_date = date;
      series.dates.push_back(fields[date_col]);
    } else {
      auto index = parse_int(fields[index_col]);
      if (!index) {
        throw Parse_error{
            fmt::format("row {}: '{}' is not an integer day", row, fields[index_col]), row};
      }
      if (previous_index && *index != *previous_index + 1) {
        throw Parse_error{
            fmt::format("row {}: day {} does not follow day {}", row, *index, *previous_index),
            row};
      }
      if (!previous_index) {
        series.first_day = static_cast<int>(*index);
      }
      previous_index = index;
    }
    auto read_count = [&](int col) {
      auto value = 0.0;
      try {
        value = parse_number(fields[col]);
      } catch (const Parse_error&) {
        throw Parse_error{fmt::format("row {}: '{}' is not a count", row, fields[col]), row};
      }
      if (!std::isfinite(value) || value != std::floor(value)) {
        throw Parse_error{fmt::format("row {}: count '{}' is not an integer", row, fields[col]),
                          row};
      }
      return value;
    };
    if (deaths_col >= 0) {
      raw_deaths.push_back(read_count(deaths_col));
    }
    if (cases_col >= 0) {
      raw_cases.push_back(read_count(cases_col));
    }
    rows.push_back(row);
  }
  if (header.empty()) {
    throw Parse_error{"input has no header row", 0};
  }
  if (rows.empty()) {
    throw Parse_error{"input has no data rows", row};
  }

  auto to_incident = [&](const std::vector<double>& raw, std::string_view name) {
    auto incident = std::vector<double>(raw.size());
    for (auto i = std::size_t{0}; i != raw.size(); ++i) {
      auto value = options.cumulative ? raw[i] - (i == 0 ? 0.0 : raw[i - 1]) : raw[i];
      if (value < 0.0) {
        if (options.cumulative && options.strict_cumulative) {
          throw Parse_error{fmt::format("row {}: cumulative {} decrease from {} to {}", rows[i],
                                        name, raw[i - 1], raw[i]),
                            rows[i]};
        }
        result.warnings.push_back(fmt::format(
            "row {}: negative incident {} ({}) clamped to 0", rows[i], name, value));
        value = 0.0;
      }
      incident[i] = value;
    }
    return incident;
  };
  series.deaths = to_incident(raw_deaths, "deaths");
  series.cases = to_incident(raw_cases, "cases");
  return result;
}

auto parse_series_file(const fs::path& path, const Parse_options& options) -> Parse_result {
  auto in = std::ifstream{path};
  if (!in) {
    throw Parse_error{fmt::format("cannot open series file {}", path.string()), 0};
  }
  return parse_series(in, options);
}

auto write_series(std::ostream& out, const Region_series& series) -> void {
  out << (series.dates.empty() ? "date_index" : "date");
  if (!series.deaths.empty()) {
    out << ",deaths";
  }
  if (!series.cases.empty()) {
    out << ",cases";
  }
  out << '\n';
  for (auto i = 0; i < series.days(); ++i) {
    out << series.label(i);
    if (!series.deaths.empty()) {
      out << ',' << format_number(series.deaths[i]);
    }
    if (!series.cases.empty()) {
      out << ',' << format_number(series.cases[i]);
    }
    out << '\n';
  }
}

auto find_start_index(const Region_series& series, Regime regime, double threshold) -> int {
  const auto& counts = series.column(regime);
  if (counts.empty()) {
    throw Domain_error{"series is empty"};
  }
  auto cumulative = 0.0;
  for (auto i = 0; i < std::ssize(counts); ++i) {
    cumulative += counts[i];
    if (cumulative >= threshold) {
      return i;
    }
  }
  throw Domain_error{fmt::format(
      "cumulative {} never reach {} (total {}); the series is uninformative for fitting",
      regime == Regime::deaths ? "deaths" : "cases", threshold, cumulative)};
}

auto slice_series(const Region_series& series, int begin, int end) -> Region_series {
  if (begin < 0 || end > series.days() || begin > end) {
    throw Out_of_range_error{fmt::format("rows [{}, {}) outside a series of {} days", begin, end,
                                         series.days())};
  }
  auto out = series;
  auto cut = [&](auto& v) {
    if (!v.empty()) {
      v = std::vector(v.begin() + begin, v.begin() + end);
    }
  };
  cut(out.dates);
  cut(out.deaths);
  cut(out.cases);
  out.first_day = series.first_day + begin;
  return out;
}

auto apply_start_rule(const Region_series& series, Regime regime, double threshold)
    -> Region_series {
  auto start = find_start_index(series, regime, threshold);
  return slice_series(series, start, series.days());
}

// ---- tables ------------------------------------------------------------------------------

auto format_number(double value) -> std::string { return fmt::format("{}", value); }

auto parse_number(std::string_view text) -> double {
  text = trim(text);
  if (!text.empty() && text.front() == '+') {
    text.remove_prefix(1);
  }
  auto value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
    throw Parse_error{fmt::format("'{}' is not a number", text), 0};
  }
  return value;
}

auto write_text_atomic(const fs::path& path, const std::string& text) -> void {
  static auto counter = std::atomic<int>{0};
  auto tmp = path;
  tmp += fmt::format(".tmp-{}-{}", ::getpid(), counter++);
  {
    auto out = std::ofstream{tmp, std::ios::binary | std::ios::trunc};
    if (!out) {
      throw std::runtime_error{fmt::format("cannot write {}", tmp.string())};
    }
    out << text;
    out.flush();
    if (!out) {
      throw std::runtime_error{fmt::format("write to {} failed", tmp.string())};
    }
  }
  fs::rename(tmp, path);
}

auto render_table(const Table& table) -> std::string {
  auto text = fmt::format("# rtphase {} v{}\n", table.schema, k_results_version);
  text += fmt::format("{}\n", fmt::join(table.columns, ","));
  for (const auto& row : table.rows) {
    text += fmt::format("{}\n", fmt::join(row, ","));
  }
  text += fmt::format("# end {}\n", table.rows.size());
  return text;
}

auto write_table(const fs::path& path, const Table& table) -> void {
  write_text_atomic(path, render_table(table));
}

auto parse_table(std::istream& in, std::string_view schema) -> Table {
  auto lines = table_lines(in);
  auto table = Table{std::string{schema}, {}, {}};
  auto i = std::size_t{0};
  while (i < lines.size() && trim(lines[i]).empty()) {
    ++i;
  }
  if (i == lines.size()) {
    throw Parse_error{"file is empty", 0};
  }
  auto head = std::istringstream{lines[i]};
  auto hash = std::string{};
  auto tool = std::string{};
  auto found_schema = std::string{};
  auto version = std::string{};
  head >> hash >> tool >> found_schema >> version;
  if (hash != "#" || tool != "rtphase") {
    throw Schema_error{"missing '# rtphase <schema> v<version>' header line"};
  }
  if (found_schema != schema) {
    throw Schema_error{fmt::format("file holds '{}' data, expected '{}'", found_schema, schema)};
  }
  if (version != fmt::format("v{}", k_results_version)) {
    throw Schema_error{fmt::format("{} file has version {}, this build reads v{}", schema,
                                   version, k_results_version)};
  }
  ++i;
  if (i == lines.size()) {
    throw Parse_error{"truncated file: no column header", static_cast<int>(i)};
  }
  table.columns = split(lines[i]);
  ++i;
  for (; i < lines.size(); ++i) {
    auto view = trim(lines[i]);
    if (view.starts_with("# end")) {
      auto count = parse_int(trim(view.substr(5)));
      if (!count || *count != std::ssize(table.rows)) {
        throw Parse_error{fmt::format("trailer says {} rows, file has {}", view.substr(5),
                                      table.rows.size()),
                          static_cast<int>(i + 1)};
      }
      return table;
    }
    if (view.empty()) {
      continue;
    }
    auto fields = split(view);
    if (fields.size() != table.columns.size()) {
      throw Parse_error{fmt::format("line {} has {} fields, expected {}", i + 1, fields.size(),
                                    table.columns.size()),
                        static_cast<int>(i + 1)};
    }
    table.rows.push_back(std::move(fields));
  }
  throw Parse_error{fmt::format("truncated {} file: end-of-data trailer missing", schema),
                    static_cast<int>(lines.size())};
}

auto read_table(const fs::path& path, std::string_view schema) -> Table {
  auto in = std::ifstream{path};
  if (!in) {
    throw Parse_error{fmt::format("cannot open {}", path.string()), 0};
  }
  try {
    return parse_table(in, schema);
  } catch (const Parse_error& e) {
    throw Parse_error{fmt::format("{}: {}", path.string(), e.what()), e.row()};
  } catch (const Schema_error& e) {
    throw Schema_error{fmt::format("{}: {}", path.string(), e.what())};
  }
}

auto summarize_fit(const Posterior_draws& draws) -> std::vector<Daily_summary> {
  return {
      {"rt", daily_bands(draws.rt)},
      {"re", daily_bands(draws.re)},
      {"infections", daily_bands(draws.infections)},
      {"fitted", daily_bands(draws.fitted)},
      {"cumulative_infections", daily_bands(draws.cumulative_infections)},
  };
}

auto draw_rows(const Posterior_draws& draws) -> std::vector<Draw_row> {
  auto rows = std::vector<Draw_row>{};
  for (auto d = 0; d < draws.n_draws(); ++d) {
    auto c = draws.chain[d];
    auto it = draws.iteration[d];
    for (auto s = std::size_t{0}; s != draws.scalar_names.size(); ++s) {
      rows.push_back({c, it, draws.scalar_names[s], draws.scalars[d][s]});
    }
    if (draws.weights.size() > static_cast<std::size_t>(d) && !draws.weights[d].empty()) {
      for (auto j = std::size_t{0}; j != draws.phase_values[d].size(); ++j) {
        rows.push_back({c, it, fmt::format("phase_r_{}", j + 1), draws.phase_values[d][j]});
      }
      for (auto j = std::size_t{0}; j != draws.weights[d].size(); ++j) {
        rows.push_back({c, it, fmt::format("w_{}", j + 1), draws.weights[d][j]});
      }
    }
  }
  return rows;
}

auto write_summary(const fs::path& path, const std::vector<Daily_summary>& summary) -> void {
  auto table = Table{"summary", {"quantity", "day"}, {}};
  for (const auto& c : band_columns()) {
    table.columns.push_back(c);
  }
  for (const auto& q : summary) {
    for (auto t = std::size_t{0}; t != q.bands.size(); ++t) {
      const auto& b = q.bands[t];
      table.rows.push_back({q.quantity, std::to_string(t + 1), format_number(b.median),
                            format_number(b.lower50), format_number(b.upper50),
                            format_number(b.lower95), format_number(b.upper95)});
    }
  }
  write_table(path, table);
}

auto read_summary(const fs::path& path) -> std::vector<Daily_summary> {
  auto table = read_table(path, "summary");
  auto result = std::vector<Daily_summary>{};
  for (auto i = std::size_t{0}; i != table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (result.empty() || result.back().quantity != r[0]) {
      result.push_back({r[0], {}});
    }
    auto day = parse_int(r[1]);
    if (!day || *day != std::ssize(result.back().bands) + 1) {
      throw Parse_error{fmt::format("{}: day column out of sequence for {}", path.string(), r[0]),
                        static_cast<int>(i + 3)};
    }
    result.back().bands.push_back({parse_number(r[2]), parse_number(r[3]), parse_number(r[4]),
                                   parse_number(r[5]), parse_number(r[6])});
  }
  return result;
}

auto write_draws(const fs::path& path, const std::vector<Draw_row>& rows) -> void {
  auto table = Table{"draws", {"chain", "iteration", "name", "value"}, {}};
  table.rows.reserve(rows.size());
  for (const auto& r : rows) {
    table.rows.push_back({std::to_string(r.chain), std::to_string(r.iteration), r.name,
                          format_number(r.value)});
  }
  write_table(path, table);
}

auto read_draws(const fs::path& path) -> std::vector<Draw_row> {
  auto table = read_table(path, "draws");
  auto rows = std::vector<Draw_row>{};
  rows.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    rows.push_back({static_cast<int>(parse_number(r[0])), static_cast<int>(parse_number(r[1])),
                    r[2], parse_number(r[3])});
  }
  return rows;
}

auto write_pointwise(const fs::path& path, const Posterior_draws& draws) -> void {
  auto table = Table{"pointwise", {"chain", "iteration"}, {}};
  for (auto day = draws.first_scored_day; day <= draws.horizon; ++day) {
    table.columns.push_back(fmt::format("day_{}", day));
  }
  for (auto d = 0; d < draws.n_draws(); ++d) {
    auto row = std::vector<std::string>{std::to_string(draws.chain[d]),
                                        std::to_string(draws.iteration[d])};
    for (auto v : draws.pointwise[d]) {
      row.push_back(format_number(v));
    }
    table.rows.push_back(std::move(row));
  }
  write_table(path, table);
}

auto read_pointwise(const fs::path& path) -> Pointwise_file {
  auto table = read_table(path, "pointwise");
  auto file = Pointwise_file{};
  for (auto c = std::size_t{2}; c < table.columns.size(); ++c) {
    auto day = parse_int(std::string_view{table.columns[c]}.substr(4));
    if (!table.columns[c].starts_with("day_") || !day) {
      throw Parse_error{fmt::format("{}: bad column '{}'", path.string(), table.columns[c]), 2};
    }
    file.days.push_back(static_cast<int>(*day));
  }
  for (const auto& r : table.rows) {
    file.chain.push_back(static_cast<int>(parse_number(r[0])));
    file.iteration.push_back(static_cast<int>(parse_number(r[1])));
    auto values = std::vector<double>{};
    values.reserve(r.size() - 2);
    for (auto c = std::size_t{2}; c < r.size(); ++c) {
      values.push_back(parse_number(r[c]));
    }
    file.loglik.values.push_back(std::move(values));
  }
  return file;
}

auto write_diagnostics(const fs::path& path, const Diagnostics_report& report) -> void {
  auto table = Table{"diagnostics", {"name", "rhat", "ess_bulk", "flagged"}, {}};
  for (const auto& s : report.scalars) {
    table.rows.push_back(
        {s.name, format_number(s.rhat), format_number(s.ess), s.flagged ? "1" : "0"});
  }
  for (auto c = std::size_t{0}; c != report.acceptance.size(); ++c) {
    table.rows.push_back({fmt::format("acceptance_chain_{}", c), "nan",
                          format_number(report.acceptance[c]), "0"});
  }
  write_table(path, table);
}

auto read_diagnostics(const fs::path& path) -> Diagnostics_report {
  auto table = read_table(path, "diagnostics");
  auto report = Diagnostics_report{};
  for (const auto& r : table.rows) {
    if (r[0].starts_with("acceptance_chain_")) {
      report.acceptance.push_back(parse_number(r[2]));
      continue;
    }
    report.scalars.push_back({r[0], parse_number(r[1]), parse_number(r[2]), r[3] == "1"});
  }
  return report;
}

auto write_results(const fs::path& dir, const Posterior_draws& draws,
                   const Diagnostics_report* report) -> void {
  fs::create_directories(dir);
  write_draws(dir / "draws.csv", draw_rows(draws));
  write_summary(dir / "summary.csv", summarize_fit(draws));
  write_pointwise(dir / "pointwise_loglik.csv", draws);
  if (report != nullptr) {
    write_diagnostics(dir / "diagnostics.csv", *report);
  }
}

auto read_results(const fs::path& dir) -> Results_bundle {
  return {read_summary(dir / "summary.csv"), read_draws(dir / "draws.csv"),
          read_pointwise(dir / "pointwise_loglik.csv")};
}

}  // namespace rtphase
