#include <cmath>

#include <gtest/gtest.h>

#include "rtphase/diagnostics.hpp"
#include "rtphase/errors.hpp"
#include "rtphase/rng.hpp"

namespace rtphase {
namespace {

auto normal_chains(int n_chains, int n, std::vector<double> means, std::uint64_t seed)
    -> std::vector<std::vector<double>> {
  auto chains = std::vector<std::vector<double>>(n_chains);
  for (auto c = 0; c < n_chains; ++c) {
    auto rng = make_stream(seed, c);
    for (auto i = 0; i < n; ++i) {
      chains[c].push_back(means[c] + draw_normal(rng));
    }
  }
  return chains;
}

TEST(SplitRhat, ConstantChainsGiveExactlyOne) {
  auto chains = std::vector<std::vector<double>>(4, std::vector<double>(100, 2.5));
  EXPECT_EQ(split_rhat(chains), 1.0);
}

TEST(SplitRhat, IidChainsAreNearOne) {
  auto rhat = split_rhat(normal_chains(4, 1000, {0, 0, 0, 0}, 61));
  EXPECT_LT(rhat, 1.01);
  EXPECT_GT(rhat, 0.99);
}

TEST(SplitRhat, SeparatedChainsAreFlagged) {
  EXPECT_GT(split_rhat(normal_chains(2, 1000, {0, 5}, 62)), 1.5);
}

TEST(SplitRhat, DriftWithinChainIsCaughtBySplitting) {
  auto chains = normal_chains(2, 1000, {0, 0}, 63);
  for (auto& chain : chains) {
    for (auto i = 0; i < 1000; ++i) {
      chain[i] += i < 500 ? 0.0 : 4.0;
    }
  }
  EXPECT_GT(split_rhat(chains), 1.5);
}

TEST(EssBulk, IidChainsNearTotalDraws) {
  auto ess = ess_bulk(normal_chains(4, 1000, {0, 0, 0, 0}, 64));
  EXPECT_NEAR(ess, 4000.0, 400.0);
}

TEST(EssBulk, Ar1MatchesTheoreticalFactor) {
  constexpr auto phi = 0.9;
  auto chains = std::vector<std::vector<double>>(4);
  for (auto c = 0; c < 4; ++c) {
    auto rng = make_stream(65, c);
    auto x = draw_normal(rng);
    for (auto i = 0; i < 20000; ++i) {
      x = phi * x + std::sqrt(1 - phi * phi) * draw_normal(rng);
      chains[c].push_back(x);
    }
  }
  // ESS / N = (1 - phi) / (1 + phi)
  auto expected = 80000.0 * (1 - phi) / (1 + phi);
  EXPECT_NEAR(ess_bulk(chains), expected, 0.15 * expected);
}

TEST(EssBulk, ConstantSampleIsNan) {
  EXPECT_TRUE(std::isnan(ess_bulk(std::vector<std::vector<double>>(2, std::vector<double>(50, 1.0)))));
}

TEST(Diagnostics, ReportFlagsSeparatedScalar) {
  auto draws = Posterior_draws{};
  draws.n_chains = 2;
  draws.scalar_names = {"good", "bad"};
  auto good = normal_chains(2, 200, {0, 0}, 66);
  auto bad = normal_chains(2, 200, {0, 5}, 67);
  for (auto c = 0; c < 2; ++c) {
    for (auto i = 0; i < 200; ++i) {
      draws.chain.push_back(c);
      draws.iteration.push_back(i);
      draws.scalars.push_back({good[c][i], bad[c][i]});
    }
  }
  draws.acceptance = {0.2, 0.3};
  auto report = diagnostics(draws);
  EXPECT_TRUE(report.any_flagged());
  EXPECT_EQ(report.flagged_names(), std::vector<std::string>{"bad"});
  EXPECT_EQ(report.acceptance, (std::vector<double>{0.2, 0.3}));
}

TEST(Diagnostics, TooFewDrawsIsDomainError) {
  auto draws = Posterior_draws{};
  draws.n_chains = 1;
  draws.scalar_names = {"x"};
  draws.chain = {0, 0};
  draws.iteration = {0, 1};
  draws.scalars = {{0.0}, {1.0}};
  EXPECT_THROW(diagnostics(draws), Domain_error);
}

}  // namespace
}  // namespace rtphase
