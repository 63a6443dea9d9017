#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rtphase/data_io.hpp"
#include "rtphase/errors.hpp"
#include "rtphase/rng.hpp"
#include "rtphase/sampler.hpp"
#include "test_support.hpp"

namespace rtphase {
namespace {

namespace fs = std::filesystem;

auto parse(const std::string& text, Parse_options options = {}) -> Parse_result {
  auto in = std::istringstream{text};
  return parse_series(in, options);
}

class Temp_dir {
 public:
  Temp_dir() : path_{fs::temp_directory_path() / ("rtphase_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++))} {
    fs::create_directories(path_);
  }
  ~Temp_dir() { fs::remove_all(path_); }
  auto path() const -> const fs::path& { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

TEST(ParseSeries, DatedIncidentCounts) {
  auto result = parse("# comment\ndate,deaths,cases\n2020-03-01,0,5\n2020-03-02,1,7\n2020-03-03,2,9\n");
  const auto& s = result.series;
  EXPECT_EQ(s.days(), 3);
  EXPECT_EQ(s.deaths, (std::vector<double>{0, 1, 2}));
  EXPECT_EQ(s.cases, (std::vector<double>{5, 7, 9}));
  EXPECT_EQ(s.label(2), "2020-03-03");
  EXPECT_TRUE(result.warnings.empty());
}

TEST(ParseSeries, DayIndexedKeepsFirstDay) {
  auto s = parse("date_index,infections\n5,1\n6,2\n").series;
  EXPECT_EQ(s.first_day, 5);
  EXPECT_EQ(s.label(1), "6");
  EXPECT_EQ(s.column(Regime::infections), (std::vector<double>{1, 2}));
  EXPECT_THROW(s.column(Regime::deaths), Domain_error);
}

TEST(ParseSeries, CumulativeDifferencedAndDecreaseClamped) {
  auto options = Parse_options{};
  options.cumulative = true;
  auto result = parse("date,deaths\n2020-01-01,3\n2020-01-02,5\n2020-01-03,4\n2020-01-04,10\n",
                      options);
  EXPECT_EQ(result.series.deaths, (std::vector<double>{3, 2, 0, 6}));
  ASSERT_EQ(result.warnings.size(), 1U);
  EXPECT_NE(result.warnings.front().find("clamped"), std::string::npos);
}

TEST(ParseSeries, StrictCumulativeRejectsDecrease) {
  auto options = Parse_options{};
  options.cumulative = true;
  options.strict_cumulative = true;
  EXPECT_THROW(parse("date,deaths\n2020-01-01,3\n2020-01-02,2\n", options), Parse_error);
}

TEST(ParseSeries, MalformedInputsAreParseErrors) {
  EXPECT_THROW(parse(""), Parse_error);
  EXPECT_THROW(parse("date,deaths\n"), Parse_error);
  EXPECT_THROW(parse("when,deaths\n1,2\n"), Parse_error);
  EXPECT_THROW(parse("date,deaths\n2020-01-01,1\n2020-01-03,1\n"), Parse_error);
  EXPECT_THROW(parse("date,deaths\n2020-01-01,1.5\n"), Parse_error);
  EXPECT_THROW(parse("date,deaths\n2020-01-01\n"), Parse_error);
  EXPECT_THROW(parse("date,deaths\n2020-13-01,1\n"), Parse_error);
}

TEST(ParseSeries, WriteParseRoundTrip) {
  auto s = parse("date,deaths\n2020-01-01,0\n2020-01-02,4\n2020-01-03,7\n").series;
  auto out = std::ostringstream{};
  write_series(out, s);
  auto again = parse(out.str()).series;
  EXPECT_EQ(again.dates, s.dates);
  EXPECT_EQ(again.deaths, s.deaths);
}

TEST(StartRule, FirstDayReachingThreshold) {
  auto s = parse("date,deaths\n2020-01-01,0\n2020-01-02,4\n2020-01-03,5\n2020-01-04,7\n").series;
  EXPECT_EQ(find_start_index(s, Regime::deaths, 0.0), 0);
  EXPECT_EQ(find_start_index(s, Regime::deaths, 9.0), 2);
  EXPECT_EQ(find_start_index(s, Regime::deaths, 10.0), 3);
  auto cut = apply_start_rule(s, Regime::deaths, 9.0);
  EXPECT_EQ(cut.dates.front(), "2020-01-03");
  EXPECT_EQ(cut.deaths, (std::vector<double>{5, 7}));
  EXPECT_THROW(find_start_index(s, Regime::deaths, 100.0), Domain_error);
}

TEST(SliceSeries, BoundsChecked) {
  auto s = parse("date_index,deaths\n1,0\n2,4\n3,5\n").series;
  auto mid = slice_series(s, 1, 3);
  EXPECT_EQ(mid.first_day, 2);
  EXPECT_EQ(mid.deaths, (std::vector<double>{4, 5}));
  EXPECT_THROW(slice_series(s, 2, 5), Out_of_range_error);
}

TEST(FormatNumber, ShortestRoundTrip) {
  auto rng = make_stream(81);
  for (auto i = 0; i < 10000; ++i) {
    auto x = std::exp(40.0 * (draw_uniform(rng) - 0.5)) * (draw_uniform(rng) < 0.5 ? -1 : 1);
    EXPECT_EQ(parse_number(format_number(x)), x);
  }
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_TRUE(std::isnan(parse_number(format_number(NAN))));
  EXPECT_THROW(parse_number("abc"), Parse_error);
}

TEST(Tables, RoundTripAndTrailerChecks) {
  auto dir = Temp_dir{};
  auto table = Table{"demo", {"a", "b"}, {{"1", "x"}, {"2", "y"}}};
  write_table(dir.path() / "t.csv", table);
  auto back = read_table(dir.path() / "t.csv", "demo");
  EXPECT_EQ(back.columns, table.columns);
  EXPECT_EQ(back.rows, table.rows);
  EXPECT_THROW(read_table(dir.path() / "t.csv", "other"), Schema_error);

  auto text = render_table(table);
  auto truncated = text.substr(0, text.rfind("# end"));
  auto in = std::istringstream{truncated};
  EXPECT_THROW(parse_table(in, "demo"), Parse_error);

  auto wrong_count = text;
  wrong_count.replace(wrong_count.rfind("# end 2"), 7, "# end 3");
  auto in2 = std::istringstream{wrong_count};
  EXPECT_THROW(parse_table(in2, "demo"), Parse_error);

  auto version = text;
  version.replace(version.find("v1"), 2, "v9");
  auto in3 = std::istringstream{version};
  EXPECT_THROW(parse_table(in3, "demo"), Schema_error);
}

TEST(Results, WriteReadRoundTrip) {
  auto config = testing::short_scenario(30, 2);
  auto state = simulate(config);
  auto data = testing::observe(config, state, Regime::deaths);
  data.counts.back() += 1.0;
  auto fit = Fit_config{};
  fit.model = Model_spec::parse("dp");
  fit.n_chains = 2;
  fit.n_iterations = 400;
  fit.prior_only = true;
  auto draws = run_mcmc(data, fit);
  auto report = diagnostics(draws);
  auto dir = Temp_dir{};
  write_results(dir.path(), draws, &report);
  auto bundle = read_results(dir.path());
  EXPECT_EQ(bundle.draws, draw_rows(draws));
  EXPECT_EQ(bundle.pointwise.loglik.values, draws.pointwise);
  EXPECT_EQ(bundle.pointwise.chain, draws.chain);
  ASSERT_EQ(bundle.summary.size(), summarize_fit(draws).size());
  EXPECT_EQ(bundle.summary.front().bands.size(), 30U);
  auto diag = read_diagnostics(dir.path() / "diagnostics.csv");
  EXPECT_EQ(diag.acceptance, report.acceptance);
  EXPECT_EQ(diag.scalars.size(), report.scalars.size());

  auto summary_path = dir.path() / "summary.csv";
  auto text = std::string{};
  {
    auto in = std::ifstream{summary_path};
    text.assign(std::istreambuf_iterator<char>{in}, {});
  }
  {
    auto out = std::ofstream{summary_path};
    out << text.substr(0, text.size() / 2);
  }
  EXPECT_THROW(read_summary(summary_path), Parse_error);
}

}  // namespace
}  // namespace rtphase
