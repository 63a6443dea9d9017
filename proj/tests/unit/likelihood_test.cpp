#include <cmath>

#include <gtest/gtest.h>

#include "rtphase/errors.hpp"
#include "rtphase/likelihood.hpp"
#include "rtphase/rng.hpp"
#include "test_support.hpp"

namespace rtphase {
namespace {

struct Fixture {
  Scenario_config config = testing::short_scenario(160, 9);
  Epidemic_state state = simulate(config);
};

auto pure_total(const Observation_data& data, std::span<const double> rt, double k, double seed)
    -> double {
  return data.regime == Regime::deaths ? log_likelihood_deaths(data, rt, k, seed).total
                                       : log_likelihood_infections(data, rt, k).total;
}

class CachedVsPure : public ::testing::TestWithParam<Regime> {};

TEST_P(CachedVsPure, RandomMoveSequenceAgreesWithPureFunctions) {
  auto fx = Fixture{};
  auto data = testing::observe(fx.config, fx.state, GetParam());
  data.validate();
  auto rng = make_stream(31);
  auto rt = std::vector<double>(fx.config.rt_schedule.daily().begin(),
                                fx.config.rt_schedule.daily().end());
  auto k = 50.0;
  auto seed = 10.0;
  auto lik = Trajectory_likelihood{data};
  EXPECT_NEAR(lik.reset(rt, k, seed), pure_total(data, rt, k, seed), 1e-8);
  for (auto step = 0; step < 300; ++step) {
    auto move = step % 4;
    auto candidate_rt = rt;
    auto candidate_k = k;
    auto candidate_seed = seed;
    auto proposed = 0.0;
    if (move == 0) {
      auto first = static_cast<int>(draw_uniform(rng) * 160);
      for (auto t = first; t < 160; ++t) {
        candidate_rt[t] *= 1.0 + 0.05 * (draw_uniform(rng) - 0.5);
      }
      proposed = lik.propose_rt(candidate_rt, first);
    } else if (move == 1) {
      auto index = static_cast<int>(draw_uniform(rng) * 160);
      candidate_rt[index] *= 1.1;
      proposed = lik.propose_day(index, candidate_rt[index]);
    } else if (move == 2) {
      candidate_k = k * std::exp(0.3 * draw_normal(rng));
      proposed = lik.propose_dispersion(candidate_k);
    } else {
      candidate_seed = seed * std::exp(0.2 * draw_normal(rng));
      proposed = lik.propose_seed(candidate_seed);
    }
    ASSERT_NEAR(proposed, pure_total(data, candidate_rt, candidate_k, candidate_seed),
                1e-8 * std::max(1.0, std::abs(proposed)))
        << "step " << step;
    if (draw_uniform(rng) < 0.5) {
      lik.accept();
      rt = candidate_rt;
      k = candidate_k;
      seed = candidate_seed;
    }
    ASSERT_NEAR(lik.total(), pure_total(data, rt, k, seed),
                1e-8 * std::max(1.0, std::abs(lik.total())));
  }
  auto pure = data.regime == Regime::deaths ? log_likelihood_deaths(data, rt, k, seed)
                                            : log_likelihood_infections(data, rt, k);
  auto cached = lik.pointwise();
  ASSERT_EQ(cached.size(), pure.pointwise.size());
  for (auto i = std::size_t{0}; i < cached.size(); ++i) {
    EXPECT_NEAR(cached[i], pure.pointwise[i], 1e-8);
  }
}

INSTANTIATE_TEST_SUITE_P(Regimes, CachedVsPure,
                         ::testing::Values(Regime::infections, Regime::deaths));

TEST(Likelihood, ScoredDaysFollowRegimeRules) {
  auto fx = Fixture{};
  auto data = testing::observe(fx.config, fx.state, Regime::infections);
  EXPECT_EQ(data.scored_from(), 7);
  EXPECT_EQ(log_likelihood_infections(data, fx.config.rt_schedule.daily(), 10.0)
                .pointwise.size(),
            154U);
  data.regime = Regime::deaths;
  data.counts = fx.state.deaths;
  EXPECT_EQ(data.scored_from(), 2);
  data.first_scored_day = 30;
  EXPECT_EQ(data.scored_days(), 131);
}

TEST(Likelihood, TruthBeatsHalvedOrInflatedPhase) {
  auto fx = Fixture{};
  for (auto regime : {Regime::infections, Regime::deaths}) {
    auto data = testing::observe(fx.config, fx.state, regime);
    auto truth = std::vector<double>(fx.config.rt_schedule.daily().begin(),
                                     fx.config.rt_schedule.daily().end());
    auto at_truth = pure_total(data, truth, 1000.0, 10.0);
    for (auto factor : {0.5, 1.5}) {
      auto perturbed = truth;
      for (auto t = 60; t < 100; ++t) {
        perturbed[t] *= factor;
      }
      EXPECT_LT(pure_total(data, perturbed, 1000.0, 10.0), at_truth)
          << regime_name(regime) << " factor " << factor;
    }
  }
}

TEST(Likelihood, ExpectedDeathsAreBilinearInIfrAndSeed) {
  auto fx = Fixture{};
  auto data = testing::observe(fx.config, fx.state, Regime::deaths);
  data.population_n = 1e300;
  auto rt = fx.config.rt_schedule.daily();
  auto lik = Trajectory_likelihood{data};
  lik.reset(rt, 100.0, 10.0);
  auto base = std::vector<double>(lik.fitted().begin(), lik.fitted().end());
  lik.propose_seed(30.0);
  lik.accept();
  for (auto t = 1; t < 160; ++t) {
    EXPECT_NEAR(lik.fitted()[t], 3.0 * base[t], 1e-9 * base[t]);
  }
  auto doubled_ifr = data;
  for (auto& x : doubled_ifr.ifr) {
    x *= 2.0;
  }
  auto lik2 = Trajectory_likelihood{doubled_ifr};
  lik2.reset(rt, 100.0, 10.0);
  for (auto t = 1; t < 160; ++t) {
    EXPECT_NEAR(lik2.fitted()[t], 2.0 * base[t], 1e-9 * base[t]);
  }
}

TEST(Likelihood, LatentInfectionsFollowRenewal) {
  auto fx = Fixture{};
  auto data = testing::observe(fx.config, fx.state, Regime::deaths);
  auto rt = fx.config.rt_schedule.daily();
  auto latent = latent_infections(data, rt, 12.0);
  auto state = Epidemic_state{};
  state.population_n = data.population_n;
  state.infections.assign(6, 12.0);
  state.recompute_susceptible();
  for (auto t = 6; t < 160; ++t) {
    state.infections.push_back(renewal_expectation(state, rt, data.gi, t));
    state.recompute_susceptible();
  }
  for (auto t = 0; t < 160; ++t) {
    EXPECT_NEAR(latent[t], state.infections[t], 1e-9 * state.infections[t]);
  }
}

TEST(Likelihood, ConstantRGridSearchFindsTruth) {
  auto config = testing::short_scenario(60, 17);
  auto state = simulate(config);
  auto data = testing::observe(config, state, Regime::infections);
  auto best_r = 0.0;
  auto best = -INFINITY;
  for (auto r = 1.0; r <= 2.0; r += 0.001) {
    auto value = log_likelihood_infections(data, std::vector<double>(60, r), 1000.0).total;
    if (value > best) {
      best = value;
      best_r = r;
    }
  }
  EXPECT_NEAR(best_r, 1.5, 0.05);
}

TEST(Likelihood, ZeroMeanWithPositiveCountIsMinusInfinity) {
  auto fx = Fixture{};
  auto data = testing::observe(fx.config, fx.state, Regime::infections);
  auto rt = std::vector<double>(160, 1.2);
  rt[80] = 0.0;
  EXPECT_EQ(log_likelihood_infections(data, rt, 50.0).total, -INFINITY);
}

TEST(Likelihood, ValidateRejectsBadShapes) {
  auto fx = Fixture{};
  auto data = testing::observe(fx.config, fx.state, Regime::deaths);
  data.ifr.pop_back();
  EXPECT_THROW(data.validate(), Shape_error);
  data = testing::observe(fx.config, fx.state, Regime::deaths);
  data.first_scored_day = 500;
  EXPECT_THROW(data.validate(), Domain_error);
}

}  // namespace
}  // namespace rtphase
