#include "rtphase/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "rtphase/errors.hpp"

namespace rtphase {

namespace {

auto log_sum_exp(std::span<const double> x) -> double {
  auto m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) {
    return m;
  }
  auto s = 0.0;
  for (auto v : x) {
    s += std::exp(v - m);
  }
  return m + std::log(s);
}

// Welford, so identical values give a variance of exactly 0.
auto sample_variance(std::span<const double> x) -> double {
  auto mean = 0.0;
  auto m2 = 0.0;
  auto n = 0;
  for (auto v : x) {
    ++n;
    auto delta = v - mean;
    mean += delta / n;
    m2 += delta * (v - mean);
  }
  return n > 1 ? m2 / (n - 1) : 0.0;
}

auto standard_error(std::span<const double> pointwise) -> double {
  return std::sqrt(pointwise.size() * sample_variance(pointwise));
}

auto column(const Pointwise_loglik& ll, int i) -> std::vector<double> {
  auto c = std::vector<double>(ll.values.size());
  for (auto s = std::size_t{0}; s != c.size(); ++s) {
    c[s] = ll.values[s][i];
  }
  return c;
}

auto qgpd(double p, double k, double sigma) -> double {
  if (std::abs(k) < 1e-12) {
    return -sigma * std::log1p(-p);
  }
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

}  // namespace

auto Pointwise_loglik::n_observations() const -> int {
  return values.empty() ? 0 : static_cast<int>(values.front().size());
}

auto Pointwise_loglik::validate() const -> void {
  auto n = n_observations();
  if (n == 0) {
    throw Domain_error{"pointwise log-likelihood has no observations"};
  }
  for (auto s = std::size_t{0}; s != values.size(); ++s) {
    if (std::ssize(values[s]) != n) {
      throw Shape_error{fmt::format("draw {} has {} observations, expected {}", s,
                                    values[s].size(), n)};
    }
    for (auto v : values[s]) {
      if (!std::isfinite(v)) {
        throw Domain_error{fmt::format("draw {} has a non-finite log-likelihood", s)};
      }
    }
  }
}

auto waic(const Pointwise_loglik& ll) -> Waic_result {
  if (ll.n_draws() < 2) {
    throw Domain_error{"WAIC needs at least two draws"};
  }
  ll.validate();
  auto n_draws = static_cast<double>(ll.n_draws());
  auto result = Waic_result{};
  for (auto i = 0; i < ll.n_observations(); ++i) {
    auto c = column(ll, i);
    auto lppd_i = log_sum_exp(c) - std::log(n_draws);
    auto p_i = sample_variance(c);
    result.lppd += lppd_i;
    result.p_waic += p_i;
    result.pointwise.push_back(-2.0 * (lppd_i - p_i));
  }
  result.waic = std::accumulate(result.pointwise.begin(), result.pointwise.end(), 0.0);
  result.se = standard_error(result.pointwise);
  return result;
}

auto fit_generalized_pareto(std::vector<double> x) -> Gpd_fit {
  auto n = x.size();
  if (n < 2) {
    throw Domain_error{"generalized Pareto fit needs at least two exceedances"};
  }
  std::sort(x.begin(), x.end());
  constexpr auto prior = 3.0;
  auto m = 30 + static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  auto xstar = x[static_cast<std::size_t>(std::floor(n / 4.0 + 0.5)) - 1];
  auto theta = std::vector<double>(static_cast<std::size_t>(m));
  auto log_lik = std::vector<double>(static_cast<std::size_t>(m));
  for (auto j = 0; j < m; ++j) {
    theta[j] = 1.0 / x[n - 1] + (1.0 - std::sqrt(m / (j + 0.5))) / prior / xstar;
    auto a = -theta[j];
    auto k = 0.0;
    for (auto v : x) {
      k += std::log1p(a * v);
    }
    k /= n;
    log_lik[j] = n * (std::log(a / k) - k - 1.0);
  }
  auto norm = log_sum_exp(log_lik);
  auto theta_hat = 0.0;
  for (auto j = 0; j < m; ++j) {
    theta_hat += theta[j] * std::exp(log_lik[j] - norm);
  }
  auto k = 0.0;
  for (auto v : x) {
    k += std::log1p(-theta_hat * v);
  }
  k /= n;
  auto sigma = -k / theta_hat;
  auto dn = static_cast<double>(n);
  k = (dn * k + 5.0) / (dn + 10.0);
  if (std::isnan(k)) {
    k = std::numeric_limits<double>::infinity();
  }
  return {k, sigma};
}

auto pareto_smooth(std::span<const double> log_ratios) -> Smoothed_weights {
  auto s = log_ratios.size();
  auto result = Smoothed_weights{};
  auto raw_max = *std::max_element(log_ratios.begin(), log_ratios.end());
  result.log_weights.resize(s);
  for (auto i = std::size_t{0}; i != s; ++i) {
    result.log_weights[i] = log_ratios[i] - raw_max;
  }
  auto tail = static_cast<std::size_t>(
      std::ceil(std::min(0.2 * s, 3.0 * std::sqrt(static_cast<double>(s)))));
  if (tail < 5 || tail >= s) {
    result.pareto_k = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  auto order = std::vector<std::size_t>(s);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return result.log_weights[a] < result.log_weights[b];
  });
  auto first_tail = s - tail;
  auto tail_min = result.log_weights[order[first_tail]];
  auto tail_max = result.log_weights[order[s - 1]];
  if (std::abs(tail_max - tail_min) < std::numeric_limits<double>::epsilon() / 100.0) {
    result.pareto_k = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  auto cutoff = std::exp(result.log_weights[order[first_tail - 1]]);
  auto exceed = std::vector<double>(tail);
  for (auto j = std::size_t{0}; j != tail; ++j) {
    exceed[j] = std::exp(result.log_weights[order[first_tail + j]]) - cutoff;
  }
  auto fit = fit_generalized_pareto(exceed);
  result.pareto_k = fit.k;
  if (std::isfinite(fit.k) && fit.sigma > 0.0) {
    for (auto j = std::size_t{0}; j != tail; ++j) {
      auto p = (j + 0.5) / static_cast<double>(tail);
      auto smoothed = std::log(qgpd(p, fit.k, fit.sigma) + cutoff);
      // never above the largest raw ratio
      result.log_weights[order[first_tail + j]] = std::min(smoothed, 0.0);
    }
  }
  return result;
}

auto psis_loo(const Pointwise_loglik& ll) -> Loo_result {
  if (ll.n_draws() < 100) {
    throw Domain_error{fmt::format("PSIS-LOO needs at least 100 draws, got {}", ll.n_draws())};
  }
  ll.validate();
  auto result = Loo_result{};
  for (auto i = 0; i < ll.n_observations(); ++i) {
    auto c = column(ll, i);
    auto ratios = std::vector<double>(c.size());
    std::transform(c.begin(), c.end(), ratios.begin(), [](double v) { return -v; });
    auto smoothed = pareto_smooth(ratios);
    auto weighted = smoothed.log_weights;
    for (auto s = std::size_t{0}; s != c.size(); ++s) {
      weighted[s] += c[s];
    }
    auto elpd_i = log_sum_exp(weighted) - log_sum_exp(smoothed.log_weights);
    result.elpd += elpd_i;
    result.pointwise.push_back(-2.0 * elpd_i);
    result.pareto_k.push_back(smoothed.pareto_k);
    if (!(smoothed.pareto_k <= 0.7)) {
      ++result.n_unreliable;
    }
  }
  result.loo = -2.0 * result.elpd;
  result.se = standard_error(result.pointwise);
  return result;
}

auto rank_models(const std::vector<Model_result>& results) -> Ranking {
  if (results.empty()) {
    throw Domain_error{"nothing to rank"};
  }
  auto n_obs = results.front().waic.pointwise.size();
  for (const auto& r : results) {
    if (r.waic.pointwise.size() != n_obs || r.loo.pointwise.size() != n_obs) {
      throw Shape_error{fmt::format(
          "model '{}' was scored on {} observations, '{}' on {}; criteria are not comparable",
          r.id, r.waic.pointwise.size(), results.front().id, n_obs)};
    }
  }
  auto order = std::vector<std::size_t>(results.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    if (results[a].waic.waic != results[b].waic.waic) {
      return results[a].waic.waic < results[b].waic.waic;
    }
    return results[a].loo.loo < results[b].loo.loo;
  });

  auto difference_se = [&](const Model_result& a, const Model_result& b) {
    auto d = std::vector<double>(n_obs);
    for (auto i = std::size_t{0}; i != n_obs; ++i) {
      d[i] = a.waic.pointwise[i] - b.waic.pointwise[i];
    }
    return standard_error(d);
  };

  auto ranking = Ranking{};
  const auto& best = results[order.front()];
  for (auto idx : order) {
    const auto& r = results[idx];
    auto row = Ranking_row{};
    row.id = r.id;
    row.waic = r.waic.waic;
    row.waic_se = r.waic.se;
    row.p_waic = r.waic.p_waic;
    row.loo = r.loo.loo;
    row.loo_se = r.loo.se;
    row.n_unreliable = r.loo.n_unreliable;
    row.d_waic = r.waic.waic - best.waic.waic;
    row.d_loo = r.loo.loo - best.loo.loo;
    if (idx != order.front()) {
      row.d_waic_se = difference_se(r, best);
      row.indistinguishable = std::abs(row.d_waic) < 2.0 * row.d_waic_se;
    }
    ranking.rows.push_back(row);
  }
  for (auto a = std::size_t{0}; a != order.size(); ++a) {
    for (auto b = a + 1; b != order.size(); ++b) {
      const auto& better = results[order[a]];
      const auto& worse = results[order[b]];
      auto pair = Pairwise_difference{better.id, worse.id, worse.waic.waic - better.waic.waic,
                                      difference_se(worse, better), false};
      pair.indistinguishable = std::abs(pair.d_waic) < 2.0 * pair.se;
      ranking.pairs.push_back(pair);
    }
  }
  ranking.winner = best.id;
  auto loo_best = std::min_element(results.begin(), results.end(), [](const auto& a,
                                                                       const auto& b) {
    return a.loo.loo < b.loo.loo;
  });
  ranking.loo_winner = loo_best->id;
  ranking.criteria_disagree = ranking.winner != ranking.loo_winner;
  return ranking;
}

}  // namespace rtphase
