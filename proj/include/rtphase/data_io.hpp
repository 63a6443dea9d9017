#pragma once

// Daily series ingestion, the start rule, and the versioned CSV tables every command reads and
// writes. Result tables start with "# rtphase <schema> v<version>" and end with
// "# end <rows>", so a truncated file is detected on read.

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "rtphase/diagnostics.hpp"
#include "rtphase/model_selection.hpp"
#include "rtphase/posterior.hpp"

namespace rtphase {

inline constexpr int k_results_version = 1;

struct Region_series {
  std::string region;
  std::vector<std::string> dates;  // ISO 8601; empty when the file is indexed by day number
  int first_day = 1;               // day number of the first row within the original file
  std::vector<double> deaths;      // empty when the file has no deaths column
  std::vector<double> cases;       // empty when the file has no cases column
  double population_n = 0.0;

  auto days() const -> int;
  auto column(Regime regime) const -> const std::vector<double>&;
  auto label(int index) const -> std::string;  // date, or day number
};

struct Parse_options {
  bool cumulative = false;
  // Decreasing cumulative counts raise a parse error instead of being clamped.
  bool strict_cumulative = false;
  std::string region;
  double population_n = 0.0;
};

struct Parse_result {
  Region_series series;
  std::vector<std::string> warnings;
};

// Header row with a `date` (YYYY-MM-DD) or `date_index` column and at least one of `deaths`,
// `cases` or `infections`. Lines starting with '#' are ignored.
auto parse_series(std::istream& in, const Parse_options& options = {}) -> Parse_result;
auto parse_series_file(const std::filesystem::path& path, const Parse_options& options = {})
    -> Parse_result;
auto write_series(std::ostream& out, const Region_series& series) -> void;

// 0-based index of the first row whose cumulative count reaches `threshold`.
auto find_start_index(const Region_series& series, Regime regime, double threshold) -> int;
// Drops the rows before find_start_index; `first_day` and dates keep the original calendar.
auto apply_start_rule(const Region_series& series, Regime regime, double threshold)
    -> Region_series;
// Keeps rows [begin, end).
auto slice_series(const Region_series& series, int begin, int end) -> Region_series;

// ---- result tables -------------------------------------------------------------------------

struct Table {
  std::string schema;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

auto format_number(double value) -> std::string;  // shortest round-trip
auto parse_number(std::string_view text) -> double;

// Written to a temporary file in the same directory, then renamed over `path`.
auto write_text_atomic(const std::filesystem::path& path, const std::string& text) -> void;
auto write_table(const std::filesystem::path& path, const Table& table) -> void;
auto render_table(const Table& table) -> std::string;
// Throws Schema_error on a schema or version mismatch, Parse_error on truncation or bad rows.
auto read_table(const std::filesystem::path& path, std::string_view schema) -> Table;
auto parse_table(std::istream& in, std::string_view schema) -> Table;

struct Daily_summary {
  std::string quantity;  // rt, re, infections, fitted, cumulative_infections
  std::vector<Band> bands;
};
auto summarize_fit(const Posterior_draws& draws) -> std::vector<Daily_summary>;

struct Draw_row {
  int chain = 0;
  int iteration = 0;
  std::string name;
  double value = 0.0;
  auto operator==(const Draw_row&) const -> bool = default;
};
// Monitored scalars plus per-draw phase values r_j and stick weights w_j, long form.
auto draw_rows(const Posterior_draws& draws) -> std::vector<Draw_row>;

struct Pointwise_file {
  std::vector<int> chain;
  std::vector<int> iteration;
  std::vector<int> days;
  Pointwise_loglik loglik;
};

auto write_summary(const std::filesystem::path& path, const std::vector<Daily_summary>& summary)
    -> void;
auto read_summary(const std::filesystem::path& path) -> std::vector<Daily_summary>;
auto write_draws(const std::filesystem::path& path, const std::vector<Draw_row>& rows) -> void;
auto read_draws(const std::filesystem::path& path) -> std::vector<Draw_row>;
auto write_pointwise(const std::filesystem::path& path, const Posterior_draws& draws) -> void;
auto read_pointwise(const std::filesystem::path& path) -> Pointwise_file;
auto write_diagnostics(const std::filesystem::path& path, const Diagnostics_report& report)
    -> void;
auto read_diagnostics(const std::filesystem::path& path) -> Diagnostics_report;

// draws.csv, summary.csv, pointwise_loglik.csv and (when given) diagnostics.csv in `dir`.
auto write_results(const std::filesystem::path& dir, const Posterior_draws& draws,
                   const Diagnostics_report* report = nullptr) -> void;

struct Results_bundle {
  std::vector<Daily_summary> summary;
  std::vector<Draw_row> draws;
  Pointwise_file pointwise;
};
auto read_results(const std::filesystem::path& dir) -> Results_bundle;

}  // namespace rtphase
