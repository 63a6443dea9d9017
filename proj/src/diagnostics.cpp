#include "rtphase/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "rtphase/errors.hpp"

namespace rtphase {

namespace {

using Chains = std::vector<std::vector<double>>;

auto split_chains(const Chains& chains) -> Chains {
  if (chains.size() < 2) {
    throw Domain_error{"convergence diagnostics need at least two chains"};
  }
  auto n = std::min_element(chains.begin(), chains.end(), [](const auto& a, const auto& b) {
             return a.size() < b.size();
           })->size();
  if (n < 8) {
    throw Domain_error{fmt::format("convergence diagnostics need at least 8 draws per chain, "
                                   "got {}",
                                   n)};
  }
  auto half = n / 2;
  auto split = Chains{};
  for (const auto& c : chains) {
    split.emplace_back(c.begin(), c.begin() + half);
    split.emplace_back(c.begin() + (n - half), c.begin() + n);
  }
  return split;
}

auto is_constant(const Chains& chains) -> bool {
  auto first = chains.front().front();
  return std::all_of(chains.begin(), chains.end(), [&](const auto& c) {
    return std::all_of(c.begin(), c.end(), [&](double v) { return v == first; });
  });
}

// Pooled average ranks mapped to Blom normal scores.
auto rank_normalise(const Chains& chains) -> Chains {
  auto values = std::vector<std::pair<double, std::size_t>>{};
  for (const auto& c : chains) {
    for (auto v : c) {
      values.emplace_back(v, values.size());
    }
  }
  std::sort(values.begin(), values.end());
  auto s = values.size();
  auto scores = std::vector<double>(s);
  auto normal = boost::math::normal_distribution<>{};
  for (auto i = std::size_t{0}; i < s;) {
    auto j = i;
    while (j + 1 < s && values[j + 1].first == values[i].first) {
      ++j;
    }
    auto rank = 0.5 * static_cast<double>(i + j) + 1.0;
    auto z = boost::math::quantile(normal, (rank - 0.375) / (static_cast<double>(s) + 0.25));
    for (auto k = i; k <= j; ++k) {
      scores[values[k].second] = z;
    }
    i = j + 1;
  }
  auto result = Chains{};
  auto offset = std::size_t{0};
  for (const auto& c : chains) {
    result.emplace_back(scores.begin() + offset, scores.begin() + offset + c.size());
    offset += c.size();
  }
  return result;
}

auto mean_of(const std::vector<double>& v) -> double {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

auto variance_of(const std::vector<double>& v) -> double {
  auto m = mean_of(v);
  auto ss = 0.0;
  for (auto x : v) {
    ss += (x - m) * (x - m);
  }
  return ss / (v.size() - 1);
}

auto rhat_of(const Chains& chains) -> double {
  auto m = chains.size();
  auto n = static_cast<double>(chains.front().size());
  auto means = std::vector<double>{};
  auto w = 0.0;
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    w += variance_of(c);
  }
  w /= m;
  auto b = n * variance_of(means);
  auto var_plus = (n - 1.0) / n * w + b / n;
  if (w == 0.0) {
    return var_plus == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return std::sqrt(var_plus / w);
}

auto autocovariance(const std::vector<double>& x) -> std::vector<double> {
  auto n = x.size();
  auto m = mean_of(x);
  auto acov = std::vector<double>(n, 0.0);
  for (auto lag = std::size_t{0}; lag < n; ++lag) {
    auto s = 0.0;
    for (auto i = 0ul; i + lag < n; ++i) {
      s += (x[i] - m) * (x[i + lag] - m);
    }
    acov[lag] = s / n;
  }
  return acov;
}

auto ess_of(const Chains& chains) -> double {
  auto m = chains.size();
  auto n = chains.front().size();
  auto acov = std::vector<std::vector<double>>{};
  auto means = std::vector<double>{};
  auto w = 0.0;
  for (const auto& c : chains) {
    acov.push_back(autocovariance(c));
    means.push_back(mean_of(c));
    w += acov.back()[0] * n / (n - 1.0);
  }
  w /= m;
  auto var_plus = w * (n - 1.0) / n + variance_of(means);
  if (!(var_plus > 0.0)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  auto rho = std::vector<double>(n, 0.0);
  auto rho_at = [&](std::size_t lag) {
    auto mean_acov = 0.0;
    for (const auto& a : acov) {
      mean_acov += a[lag];
    }
    mean_acov /= m;
    return 1.0 - (w - mean_acov) / var_plus;
  };
  rho[0] = 1.0;
  rho[1] = rho_at(1);
  auto even = rho[0];
  auto odd = rho[1];
  auto t = std::size_t{1};
  while (t + 5 < n && even + odd > 0.0) {
    even = rho_at(t + 1);
    odd = rho_at(t + 2);
    if (even + odd >= 0.0) {
      rho[t + 1] = even;
      rho[t + 2] = odd;
    }
    t += 2;
  }
  auto max_t = std::max<std::size_t>(t, 3) - 2;
  if (even > 0.0) {
    rho[max_t + 1] = even;
  }
  // initial monotone sequence
  for (auto k = std::size_t{1}; k + 2 <= max_t; k += 2) {
    if (rho[k + 1] + rho[k + 2] > rho[k - 1] + rho[k]) {
      rho[k + 1] = (rho[k - 1] + rho[k]) / 2.0;
      rho[k + 2] = rho[k + 1];
    }
  }
  auto tau = -1.0;
  for (auto k = std::size_t{0}; k < max_t; ++k) {
    tau += 2.0 * rho[k];
  }
  tau += rho[max_t + 1];
  auto total = static_cast<double>(m * n);
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

}  // namespace

auto split_rhat(const std::vector<std::vector<double>>& chains) -> double {
  auto split = split_chains(chains);
  if (is_constant(split)) {
    return 1.0;
  }
  return rhat_of(rank_normalise(split));
}

auto ess_bulk(const std::vector<std::vector<double>>& chains) -> double {
  auto split = split_chains(chains);
  if (is_constant(split)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return ess_of(rank_normalise(split));
}

auto Diagnostics_report::any_flagged() const -> bool {
  return std::any_of(scalars.begin(), scalars.end(), [](const auto& s) { return s.flagged; });
}

auto Diagnostics_report::flagged_names() const -> std::vector<std::string> {
  auto names = std::vector<std::string>{};
  for (const auto& s : scalars) {
    if (s.flagged) {
      names.push_back(s.name);
    }
  }
  return names;
}

auto diagnostics(const Posterior_draws& draws, double rhat_threshold) -> Diagnostics_report {
  if (draws.n_chains < 2) {
    throw Domain_error{"diagnostics need at least two chains"};
  }
  auto per_chain = std::vector<int>(static_cast<std::size_t>(draws.n_chains), 0);
  for (auto c : draws.chain) {
    ++per_chain.at(c);
  }
  auto fewest = *std::min_element(per_chain.begin(), per_chain.end());
  if (fewest < 100) {
    throw Domain_error{fmt::format(
        "diagnostics need at least 100 post-warmup draws per chain, a chain has {}", fewest)};
  }
  auto report = Diagnostics_report{};
  report.rhat_threshold = rhat_threshold;
  report.acceptance = draws.acceptance;
  for (const auto& name : draws.scalar_names) {
    auto chains = draws.scalar_by_chain(name);
    auto d = Scalar_diagnostic{name, split_rhat(chains), ess_bulk(chains), false};
    d.flagged = !(d.rhat <= rhat_threshold);
    report.scalars.push_back(std::move(d));
  }
  return report;
}

}  // namespace rtphase
