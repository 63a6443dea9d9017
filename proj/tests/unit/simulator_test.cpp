#include <cmath>

#include <gtest/gtest.h>

#include "rtphase/errors.hpp"
#include "rtphase/simulator.hpp"
#include "test_support.hpp"

namespace rtphase {
namespace {

TEST(Simulate, FixedSeedIsBitReproducible) {
  auto config = five_phase_scenario(7);
  auto a = simulate(config);
  auto b = simulate(config);
  EXPECT_EQ(a.infections, b.infections);
  EXPECT_EQ(a.deaths, b.deaths);
  EXPECT_EQ(a.susceptible, b.susceptible);
  config.rng_seed = 8;
  EXPECT_NE(simulate(config).infections, a.infections);
}

TEST(Simulate, SeedsAndBookkeeping) {
  auto config = five_phase_scenario(3);
  auto state = simulate(config);
  ASSERT_EQ(state.days(), 250);
  for (auto t = 0; t < 6; ++t) {
    EXPECT_EQ(state.infections[t], 10.0);
  }
  auto cumulative = 0.0;
  for (auto t = 0; t < state.days(); ++t) {
    EXPECT_GE(state.infections[t], 0.0);
    EXPECT_EQ(state.infections[t], std::round(state.infections[t]));
    cumulative += state.infections[t];
    EXPECT_EQ(state.susceptible[t], config.population_n - cumulative);
  }
}

TEST(Simulate, SmallPopulationNeverGoesNegative) {
  auto config = testing::short_scenario(120);
  config.population_n = 500.0;
  config.rt_schedule = assemble_rt(std::vector<double>{6.0}, std::vector<int>{}, 120);
  auto state = simulate(config);
  for (auto s : state.susceptible) {
    EXPECT_GE(s, 0.0);
  }
}

TEST(Simulate, InvalidConfigIsDomainError) {
  auto config = five_phase_scenario();
  config.ifr = 1.5;
  EXPECT_THROW(simulate(config), Domain_error);
  config = five_phase_scenario();
  config.horizon = 100;
  EXPECT_THROW(simulate(config), Domain_error);
}

TEST(ReplicateStudy, FirstReplicateEqualsSimulateAndJobsDoNotMatter) {
  auto config = testing::short_scenario(80, 5);
  auto one = replicate_study(config, 4, 1);
  auto many = replicate_study(config, 4, 3);
  ASSERT_EQ(one.size(), 4U);
  EXPECT_EQ(one[0].infections, simulate(config).infections);
  for (auto i = 0; i < 4; ++i) {
    EXPECT_EQ(one[i].infections, many[i].infections);
    EXPECT_EQ(one[i].deaths, many[i].deaths);
  }
  EXPECT_NE(one[1].infections, one[2].infections);
}

TEST(ReplicateStudy, MeanTracksDeterministicRenewal) {
  auto config = testing::short_scenario(60, 100);
  auto replicates = replicate_study(config, 400);
  // deterministic recursion on expected counts
  auto det = Epidemic_state{};
  det.population_n = config.population_n;
  det.infections = config.seed_infections;
  det.recompute_susceptible();
  auto rt = config.rt_schedule.daily();
  for (auto t = 6; t < 60; ++t) {
    auto next = renewal_expectation(det, rt, config.gi, t);
    det.infections.push_back(next);
    det.recompute_susceptible();
  }
  for (auto day : {20, 40, 60}) {
    auto mean = 0.0;
    for (const auto& r : replicates) {
      mean += r.infections[day - 1];
    }
    mean /= static_cast<double>(replicates.size());
    EXPECT_NEAR(mean, det.infections[day - 1], 0.05 * det.infections[day - 1]) << day;
  }
}

TEST(Simulate, DeathsArePoissonGivenInfectionsInTheLimit) {
  auto config = testing::short_scenario(150, 40);
  config.dispersion_k = 1e12;
  auto replicates = replicate_study(config, 40);
  auto sum = 0.0;
  auto n = 0;
  for (const auto& r : replicates) {
    for (auto t = 60; t <= 150; ++t) {
      auto mu = death_expectation(r.infections, config.ifr, config.pi, t);
      if (mu > 5.0) {
        sum += (r.deaths[t - 1] - mu) * (r.deaths[t - 1] - mu) / mu;
        ++n;
      }
    }
  }
  ASSERT_GT(n, 1000);
  // Pearson dispersion has mean 1 and sd about sqrt(2 / n)
  EXPECT_NEAR(sum / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(Simulate, StrongDispersionInflatesVariance) {
  auto config = testing::short_scenario(150, 41);
  config.dispersion_k = 2.0;
  auto replicates = replicate_study(config, 40);
  auto sum = 0.0;
  auto n = 0;
  for (const auto& r : replicates) {
    for (auto t = 60; t <= 150; ++t) {
      auto mu = death_expectation(r.infections, config.ifr, config.pi, t);
      if (mu > 5.0) {
        sum += (r.deaths[t - 1] - mu) * (r.deaths[t - 1] - mu) / (mu + mu * mu / 2.0);
        ++n;
      }
    }
  }
  ASSERT_GT(n, 500);
  EXPECT_NEAR(sum / n, 1.0, 0.2);
}

}  // namespace
}  // namespace rtphase
