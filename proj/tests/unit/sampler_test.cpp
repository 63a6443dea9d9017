#include <algorithm>
#include <array>
#include <cmath>

#include <gtest/gtest.h>

#include "rtphase/errors.hpp"
#include "rtphase/posterior.hpp"
#include "rtphase/sampler.hpp"
#include "test_support.hpp"

namespace rtphase {
namespace {

auto tiny_data() -> Observation_data {
  auto data = Observation_data{};
  data.regime = Regime::infections;
  data.counts = {10, 14, 9};
  data.population_n = 1e6;
  data.gi = Discretized_interval::from_masses({0.5, 0.5});
  data.seed_days = 1;
  return data;
}

TEST(GibbsLabels, ThreeDaysTwoPhasesMatchesEnumeration) {
  auto data = tiny_data();
  auto values = std::array<double, 2>{0.8, 1.6};
  auto log_w = std::array<double, 2>{std::log(0.3), std::log(0.7)};
  constexpr auto k = 10.0;

  auto exact = std::array<double, 8>{};
  auto z_total = 0.0;
  for (auto code = 0; code < 8; ++code) {
    auto rt = std::vector<double>(3);
    auto log_p = 0.0;
    for (auto t = 0; t < 3; ++t) {
      auto label = (code >> t) & 1;
      rt[t] = values[label];
      log_p += log_w[label];
    }
    exact[code] = std::exp(log_p + log_likelihood_infections(data, rt, k).total);
    z_total += exact[code];
  }

  auto labels = std::vector<int>{0, 0, 0};
  auto lik = Trajectory_likelihood{data};
  lik.reset(std::vector<double>(3, values[0]), k, 0.0);
  auto rng = make_stream(51);
  constexpr auto sweeps = 100000;
  auto counts = std::array<int, 8>{};
  for (auto s = 0; s < sweeps; ++s) {
    gibbs_update_labels(labels, values, log_w, lik, rng);
    ++counts[labels[0] + 2 * labels[1] + 4 * labels[2]];
  }
  auto chi2 = 0.0;
  for (auto code = 0; code < 8; ++code) {
    auto expected = sweeps * exact[code] / z_total;
    chi2 += (counts[code] - expected) * (counts[code] - expected) / expected;
  }
  // 99.9% point of chi-square with 7 degrees of freedom
  EXPECT_LT(chi2, 24.32);
}

TEST(GibbsLabels, MinusInfinityWeightIsNeverChosen) {
  auto data = tiny_data();
  auto values = std::array<double, 2>{1.0, 1.3};
  auto log_w = std::array<double, 2>{0.0, -INFINITY};
  auto labels = std::vector<int>{0, 0, 0};
  auto lik = Trajectory_likelihood{data};
  lik.reset(std::vector<double>(3, 1.0), 10.0, 0.0);
  auto rng = make_stream(52);
  for (auto s = 0; s < 5000; ++s) {
    gibbs_update_labels(labels, values, log_w, lik, rng);
    EXPECT_EQ(labels, (std::vector<int>{0, 0, 0}));
  }
}

auto prior_config(std::string_view model) -> Fit_config {
  auto config = Fit_config{};
  config.model = Model_spec::parse(model);
  config.prior_only = true;
  config.n_chains = 4;
  config.n_iterations = 40000;
  config.rng_seed = 7;
  return config;
}

auto small_data(int horizon) -> Observation_data {
  auto config = testing::short_scenario(horizon, 3);
  auto state = simulate(config);
  auto data = testing::observe(config, state, Regime::deaths);
  data.counts.back() += 1.0;
  return data;
}

auto scalar_values(const Posterior_draws& draws, std::string_view name) -> std::vector<double> {
  auto index = draws.scalar_index(name);
  EXPECT_GE(index, 0) << name;
  auto values = std::vector<double>{};
  for (const auto& row : draws.scalars) {
    values.push_back(row[index]);
  }
  return values;
}

auto mean_of(const std::vector<double>& v) -> double {
  auto total = 0.0;
  for (auto x : v) {
    total += x;
  }
  return total / static_cast<double>(v.size());
}

TEST(PriorOnly, FixedKRecoversPriorMoments) {
  auto data = small_data(30);
  auto draws = run_mcmc(data, prior_config("fixedk:2"));
  // T_1 ~ Uniform(3, 30)
  EXPECT_NEAR(mean_of(scalar_values(draws, "cp_1")), 16.5, 0.8);
  auto log_r = scalar_values(draws, "r_1");
  for (auto& x : log_r) {
    x = std::log(x);
  }
  EXPECT_NEAR(mean_of(log_r), 0.0, 0.06);
  auto sq = 0.0;
  for (auto x : log_r) {
    sq += x * x;
  }
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(log_r.size())), 0.75, 0.05);
  EXPECT_NEAR(mean_of(scalar_values(draws, "k")), 5.0, 0.4);
  EXPECT_NEAR(mean_of(scalar_values(draws, "seed")), 100.0, 8.0);
}

TEST(PriorOnly, DpConcentrationAndCoClusteringMatchPrior) {
  auto data = small_data(8);
  auto draws = run_mcmc(data, prior_config("dp"));
  // theta ~ Gamma(1, 1)
  EXPECT_NEAR(mean_of(scalar_values(draws, "theta")), 1.0, 0.1);

  auto fixed = prior_config("dp");
  fixed.model.dp.fixed_theta = 1.0;
  auto fixed_draws = run_mcmc(data, fixed);
  auto pair = 0.0;
  auto triple = 0.0;
  for (const auto& z : fixed_draws.labels) {
    pair += z[0] == z[1] ? 1.0 : 0.0;
    triple += (z[0] == z[1] && z[1] == z[2]) ? 1.0 : 0.0;
  }
  auto n = static_cast<double>(fixed_draws.n_draws());
  // E[sum w^2] = 1 / (1 + theta), E[sum w^3] = 2 / ((1 + theta)(2 + theta))
  EXPECT_NEAR(pair / n, 0.5, 0.03);
  EXPECT_NEAR(triple / n, 1.0 / 3.0, 0.03);
}

TEST(PriorOnly, PpCoClusteringMatchesDirectPriorSimulation) {
  auto data = small_data(8);
  auto config = prior_config("pp");
  config.model.pp.fixed_lambda = 0.3;
  auto draws = run_mcmc(data, config);
  auto pair = 0.0;
  for (const auto& z : draws.labels) {
    pair += z[0] == z[1] ? 1.0 : 0.0;
  }
  auto rng = make_stream(53);
  auto oracle = 0.0;
  constexpr auto n_oracle = 200000;
  for (auto i = 0; i < n_oracle; ++i) {
    auto sticks = pp_stick_weights(sample_pp_durations(rng, 0.3, 100), 8.0, 100);
    for (auto w : sticks.weights) {
      oracle += w * w;
    }
  }
  EXPECT_NEAR(pair / draws.n_draws(), oracle / n_oracle, 0.03);
}

TEST(PriorOnly, PpCollapsedLambdaKeepsGammaPrior) {
  auto data = small_data(8);
  auto draws = run_mcmc(data, prior_config("pp"));
  auto lambda = scalar_values(draws, "lambda");
  // lambda ~ Gamma(0.02, 1): P(lambda > 0.1) = Q(0.02, 0.1) = 0.0361
  auto above = static_cast<double>(std::count_if(lambda.begin(), lambda.end(),
                                                 [](double x) { return x > 0.1; }));
  EXPECT_NEAR(above / lambda.size(), 0.0361, 0.015);
}

TEST(RunMcmc, SameSeedSameDrawsRegardlessOfJobs) {
  auto config = testing::short_scenario(60, 4);
  auto state = simulate(config);
  auto data = testing::observe(config, state, Regime::infections);
  auto fit = Fit_config{};
  fit.model = Model_spec::parse("dp");
  fit.n_chains = 2;
  fit.n_iterations = 400;
  fit.rng_seed = 99;
  auto a = run_mcmc(data, fit);
  fit.jobs = 2;
  auto b = run_mcmc(data, fit);
  EXPECT_EQ(a.rt, b.rt);
  EXPECT_EQ(a.loglik, b.loglik);
  fit.rng_seed = 100;
  EXPECT_NE(run_mcmc(data, fit).rt, a.rt);
}

TEST(RunMcmc, SinglePhaseRecoversEarlyGrowthRate) {
  auto config = testing::short_scenario(60, 6);
  auto state = simulate(config);
  auto data = testing::observe(config, state, Regime::infections);
  auto fit = Fit_config{};
  fit.model = Model_spec::parse("fixedk:1");
  fit.n_chains = 2;
  fit.n_iterations = 4000;
  auto draws = run_mcmc(data, fit);
  draws.validate();
  EXPECT_NEAR(quantile(scalar_values(draws, "r_1"), 0.5), 1.5, 0.15);
  EXPECT_EQ(occupied_mode(draws), 1);
  EXPECT_EQ(contiguity_fraction(draws), 1.0);
}

TEST(RunMcmc, DrawsAreCappedPerChain) {
  auto data = small_data(30);
  auto config = prior_config("fixedk:2");
  config.n_iterations = 5000;
  config.max_draws_per_chain = 300;
  auto draws = run_mcmc(data, config);
  // 2500 post-warmup iterations thinned by 9
  EXPECT_EQ(draws.n_draws(), 4 * 277);
  EXPECT_EQ(draws.n_chains, 4);
}

TEST(ModelSpec, ParsesFlags) {
  EXPECT_EQ(Model_spec::parse("fixedk:5").fixed_k.k_phases, 5);
  EXPECT_EQ(Model_spec::parse("pp").kind, Model_kind::pp);
  EXPECT_EQ(Model_spec::parse("dp").id(), "dp");
  EXPECT_EQ(Model_spec::parse("fixedk:3").id(), "fixedk:3");
  EXPECT_THROW(Model_spec::parse("fixedk:0"), Domain_error);
  EXPECT_THROW(Model_spec::parse("rj"), Domain_error);
}

TEST(FitConfig, RejectsSingleChain) {
  auto config = Fit_config{};
  config.n_chains = 1;
  EXPECT_THROW(config.validate(), Domain_error);
}

TEST(RunMcmc, AllZeroSeriesIsFitError) {
  auto data = small_data(30);
  std::fill(data.counts.begin(), data.counts.end(), 0.0);
  auto config = Fit_config{};
  config.n_iterations = 100;
  EXPECT_THROW(run_mcmc(data, config), Fit_error);
}

}  // namespace
}  // namespace rtphase
