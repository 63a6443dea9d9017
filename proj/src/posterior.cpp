#include "rtphase/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "rtphase/errors.hpp"

namespace rtphase {

auto Posterior_draws::scalar_index(std::string_view name) const -> int {
  auto it = std::find(scalar_names.begin(), scalar_names.end(), name);
  return it == scalar_names.end() ? -1 : static_cast<int>(it - scalar_names.begin());
}

auto Posterior_draws::scalar_by_chain(std::string_view name) const
    -> std::vector<std::vector<double>> {
  auto index = scalar_index(name);
  if (index < 0) {
    throw Domain_error{fmt::format("no monitored scalar named '{}'", name)};
  }
  auto per_chain = std::vector<std::vector<double>>(static_cast<std::size_t>(n_chains));
  for (auto d = 0; d < n_draws(); ++d) {
    per_chain.at(chain[d]).push_back(scalars[d][index]);
  }
  return per_chain;
}

auto Posterior_draws::validate() const -> void {
  auto n = static_cast<std::size_t>(n_draws());
  auto observations = static_cast<std::size_t>(horizon - first_scored_day + 1);
  auto check_rows = [&](const auto& m, std::string_view what, std::size_t width) {
    if (m.size() != n) {
      throw Shape_error{fmt::format("{} has {} draws, expected {}", what, m.size(), n)};
    }
    if constexpr (requires { m.front().size(); }) {
      for (const auto& row : m) {
        if (width != 0 && row.size() != width) {
          throw Shape_error{fmt::format("{} row has {} entries, expected {}", what, row.size(),
                                        width)};
        }
      }
    }
  };
  auto days = static_cast<std::size_t>(horizon);
  check_rows(iteration, "iteration", 0);
  check_rows(scalars, "scalars", scalar_names.size());
  check_rows(rt, "R_t", days);
  check_rows(re, "Re", days);
  check_rows(infections, "infections", days);
  check_rows(fitted, "fitted", days);
  check_rows(pointwise, "pointwise log-likelihood", observations);
  check_rows(loglik, "log-likelihood", 0);
  check_rows(occupied, "occupied", 0);
  for (auto d = std::size_t{0}; d != n; ++d) {
    for (auto v : rt[d]) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw Domain_error{fmt::format("draw {} has non-positive R_t {}", d, v)};
      }
    }
    if (!std::isfinite(loglik[d])) {
      throw Domain_error{fmt::format("draw {} has a non-finite log-likelihood", d)};
    }
    auto sum = 0.0;
    for (auto v : pointwise[d]) {
      if (!std::isfinite(v)) {
        throw Domain_error{fmt::format("draw {} has a non-finite pointwise term", d)};
      }
      sum += v;
    }
    if (std::abs(sum - loglik[d]) > 1e-6 * std::max(1.0, std::abs(sum))) {
      throw Domain_error{fmt::format("draw {}: pointwise terms sum to {}, total is {}", d, sum,
                                     loglik[d])};
    }
  }
}

auto quantile(std::vector<double> values, double p) -> double {
  if (values.empty()) {
    throw Domain_error{"quantile of an empty sample"};
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Domain_error{fmt::format("quantile level {} outside [0, 1]", p)};
  }
  auto h = (values.size() - 1) * p;
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + lo, values.end());
  auto a = values[lo];
  if (hi == lo) {
    return a;
  }
  auto b = *std::min_element(values.begin() + lo + 1, values.end());
  return a + (h - lo) * (b - a);
}

auto summarize_band(std::span<const double> values) -> Band {
  auto v = std::vector<double>(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  auto q = [&](double p) { return quantile(v, p); };
  return Band{q(0.5), q(0.25), q(0.75), q(0.025), q(0.975)};
}

auto daily_bands(const std::vector<std::vector<double>>& per_draw) -> std::vector<Band> {
  if (per_draw.empty()) {
    return {};
  }
  auto days = per_draw.front().size();
  auto bands = std::vector<Band>{};
  bands.reserve(days);
  auto column = std::vector<double>(per_draw.size());
  for (auto t = std::size_t{0}; t != days; ++t) {
    for (auto d = std::size_t{0}; d != per_draw.size(); ++d) {
      column[d] = per_draw[d].at(t);
    }
    bands.push_back(summarize_band(column));
  }
  return bands;
}

auto band_coverage(std::span<const Band> bands, std::span<const double> truth, int from_day)
    -> double {
  if (bands.size() != truth.size()) {
    throw Shape_error{"bands and truth differ in length"};
  }
  auto covered = 0;
  auto total = 0;
  for (auto day = std::max(from_day, 1); day <= std::ssize(bands); ++day) {
    const auto& b = bands[day - 1];
    ++total;
    if (b.lower95 <= truth[day - 1] && truth[day - 1] <= b.upper95) {
      ++covered;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(covered) / total;
}

auto occupied_distribution(const Posterior_draws& draws) -> std::vector<Occupied_count> {
  auto counts = std::map<int, int>{};
  for (auto k : draws.occupied) {
    ++counts[k];
  }
  auto result = std::vector<Occupied_count>{};
  for (auto [k, n] : counts) {
    result.push_back({k, static_cast<double>(n) / draws.occupied.size()});
  }
  return result;
}

auto occupied_mode(const Posterior_draws& draws) -> int {
  auto dist = occupied_distribution(draws);
  if (dist.empty()) {
    throw Domain_error{"no draws"};
  }
  return std::max_element(dist.begin(), dist.end(), [](const auto& a, const auto& b) {
           return a.probability < b.probability;
         })->phases;
}

auto contiguity_fraction(const Posterior_draws& draws) -> double {
  if (draws.contiguous.empty()) {
    return 0.0;
  }
  auto n = std::count(draws.contiguous.begin(), draws.contiguous.end(), std::uint8_t{1});
  return static_cast<double>(n) / draws.contiguous.size();
}

auto median_changepoints(const Posterior_draws& draws) -> std::vector<double> {
  auto result = std::vector<double>{};
  for (auto i = 1;; ++i) {
    auto index = draws.scalar_index(fmt::format("cp_{}", i));
    if (index < 0) {
      break;
    }
    auto values = std::vector<double>{};
    values.reserve(draws.scalars.size());
    for (const auto& row : draws.scalars) {
      values.push_back(row[index]);
    }
    result.push_back(quantile(std::move(values), 0.5));
  }
  return result;
}

}  // namespace rtphase
