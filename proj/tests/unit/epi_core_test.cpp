#include <cmath>
#include <numeric>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "rtphase/epi_core.hpp"
#include "rtphase/errors.hpp"
#include "rtphase/rng.hpp"

namespace rtphase {
namespace {

TEST(DiscretizeGamma, GenerationIntervalSumsToOneWithMeanNearContinuous) {
  auto gi = discretize_gamma(6.5, 4.4);
  auto masses = gi.masses();
  EXPECT_NEAR(std::accumulate(masses.begin(), masses.end(), 0.0), 1.0, 1e-12);
  EXPECT_NEAR(gi.discrete_mean(), 6.5, 0.5);
  for (auto m : masses) {
    EXPECT_GE(m, 0.0);
  }
}

TEST(DiscretizeGamma, TruncatesAtFirstLagReaching999Permille) {
  auto pi = discretize_gamma(19.0, 8.5);
  auto shape = (19.0 / 8.5) * (19.0 / 8.5);
  auto dist = boost::math::gamma_distribution<double>{shape, 8.5 * 8.5 / 19.0};
  EXPECT_GE(boost::math::cdf(dist, pi.max_lag()), 0.999);
  EXPECT_LT(boost::math::cdf(dist, pi.max_lag() - 1), 0.999);
}

TEST(DiscretizeGamma, LagNineteenMatchesQuadratureOfDensity) {
  auto pi = discretize_gamma(19.0, 8.5);
  auto shape = (19.0 / 8.5) * (19.0 / 8.5);
  auto rate = 19.0 / (8.5 * 8.5);
  auto density = [&](double x) {
    return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(x) - rate * x -
                    std::lgamma(shape));
  };
  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto bin = Quad::integrate(density, 18.0, 19.0, 15, 1e-14);
  auto total = Quad::integrate(density, 1e-12, static_cast<double>(pi.max_lag()), 15, 1e-14);
  EXPECT_NEAR(pi.mass(19), bin / total, 1e-9);
}

TEST(DiscretizeGamma, TinySdConcentratesOnContainingLag) {
  EXPECT_NEAR(discretize_gamma(0.6, 1e-3).mass(1), 1.0, 1e-12);
  auto boundary = discretize_gamma(1.0, 1e-3);
  EXPECT_NEAR(boundary.mass(1), 0.5, 1e-3);
  EXPECT_NEAR(boundary.mass(2), 0.5, 1e-3);
}

TEST(DiscretizeGamma, RejectsNonPositiveParameters) {
  EXPECT_THROW(discretize_gamma(0.0, 1.0), Domain_error);
  EXPECT_THROW(discretize_gamma(1.0, -1.0), Domain_error);
}

TEST(ActiveInfectives, TwoDayInfectiousPeriod) {
  auto active = active_infectives(std::vector<double>{1, 0, 0}, std::vector<double>{1, 1, 0});
  EXPECT_EQ(active, (std::vector<double>{1, 1, 0}));
}

TEST(ActiveInfectives, HandArithmetic) {
  auto active = active_infectives(std::vector<double>{3, 2, 5}, std::vector<double>{1, 0.5, 0.25});
  EXPECT_DOUBLE_EQ(active[2], 3 * 0.25 + 2 * 0.5 + 5 * 1.0);
}

TEST(ActiveInfectives, ZeroSeriesAndShapeMismatch) {
  auto active = active_infectives(std::vector<double>(4, 0.0), std::vector<double>{1, 1, 1, 1});
  EXPECT_EQ(active, std::vector<double>(4, 0.0));
  EXPECT_THROW(active_infectives(std::vector<double>{1, 2}, std::vector<double>{1}),
               Shape_error);
}

auto make_state(std::vector<double> infections, double n) -> Epidemic_state {
  auto state = Epidemic_state{};
  state.population_n = n;
  state.infections = std::move(infections);
  state.recompute_susceptible();
  return state;
}

TEST(RenewalExpectation, HandSummedExample) {
  // S_2 / n = 0.9 with c = (10, 20)
  auto state = make_state({10, 20}, 300.0);
  auto gi = Discretized_interval::from_masses({0.6, 0.4});
  auto rt = std::vector<double>{1.0, 1.35};
  EXPECT_NEAR(renewal_expectation(state, rt, gi, 2), 0.9 * 1.35 * (10 * 0.4 + 20 * 0.6), 1e-12);
}

TEST(RenewalExpectation, OneGenerationDoubling) {
  auto state = make_state({1}, 1e12);
  auto gi = Discretized_interval::from_masses({1.0});
  EXPECT_NEAR(renewal_expectation(state, std::vector<double>{2.0}, gi, 1), 2.0, 1e-9);
}

TEST(RenewalExpectation, DepletedSusceptiblesGiveZero) {
  auto state = make_state({50, 50}, 100.0);
  auto gi = Discretized_interval::from_masses({0.5, 0.5});
  EXPECT_EQ(renewal_expectation(state, std::vector<double>{3.0, 3.0}, gi, 2), 0.0);
}

TEST(RenewalExpectation, LinearInRAndMonotoneInCounts) {
  auto gi = discretize_gamma(6.5, 4.4);
  auto state = make_state({5, 8, 13, 21, 34}, 1e6);
  auto rt = std::vector<double>(5, 1.2);
  auto base = renewal_expectation(state, rt, gi, 5);
  auto doubled = rt;
  doubled[4] *= 2.0;
  EXPECT_NEAR(renewal_expectation(state, doubled, gi, 5), 2.0 * base, 1e-12);
  auto more = make_state({5, 8, 20, 21, 34}, 1e6);
  EXPECT_GE(renewal_expectation(more, rt, gi, 5) + 1e-9,
            base * (more.susceptible[4] / state.susceptible[4]));
}

TEST(RenewalExpectation, DayBeyondStateIsOutOfRange) {
  auto state = make_state({1, 2}, 100.0);
  auto gi = Discretized_interval::from_masses({1.0});
  EXPECT_THROW(renewal_expectation(state, std::vector<double>{1, 1, 1}, gi, 3),
               Out_of_range_error);
  EXPECT_THROW(renewal_expectation(state, std::vector<double>{1, 1}, gi, 0), Out_of_range_error);
}

TEST(DeathExpectation, DeltaKernelShiftsAndScales) {
  auto pi = Discretized_interval::from_masses({1.0});
  auto c = std::vector<double>{100, 0, 40, 7, 3};
  EXPECT_EQ(death_expectation(c, 0.0, pi, 2), 0.0);
  EXPECT_NEAR(death_expectation(c, 0.02, pi, 2), 2.0, 1e-12);
  auto lag3 = Discretized_interval::from_masses({0, 0, 1.0});
  for (auto t = 4; t <= 5; ++t) {
    EXPECT_NEAR(death_expectation(c, 0.1, lag3, t), 0.1 * c[t - 4], 1e-12);
  }
}

TEST(DeathExpectation, ScenarioDayHundredMatchesDoubleLoop) {
  auto pi = discretize_gamma(19.0, 8.5);
  auto rng = make_stream(11);
  auto c = std::vector<double>(120);
  for (auto& x : c) {
    x = std::floor(1000.0 * draw_uniform(rng));
  }
  auto brute = 0.0;
  for (auto s = 1; s < 100; ++s) {
    for (auto lag = 1; lag <= pi.max_lag(); ++lag) {
      if (s + lag == 100) {
        brute += c[s - 1] * pi.masses()[lag - 1];
      }
    }
  }
  EXPECT_NEAR(death_expectation(c, 0.02, pi, 100), 0.02 * brute, 1e-12 * brute);
}

TEST(EffectiveR, Arithmetic) {
  EXPECT_DOUBLE_EQ(effective_r(1.7, 500.0, 500.0), 1.7);
  EXPECT_EQ(effective_r(1.7, 0.0, 500.0), 0.0);
  EXPECT_NEAR(effective_r(1.5, 80.0, 100.0), 1.2, 1e-15);
  EXPECT_THROW(effective_r(1.5, 0.0, 0.0), Domain_error);
}

TEST(NegbinLogPmf, ClosedFormAtZero) {
  EXPECT_NEAR(negbin_log_pmf(0, 1.0, 1.0), std::log(0.5), 1e-14);
}

TEST(NegbinLogPmf, PoissonLimit) {
  for (auto mu : {0.5, 3.0, 12.0}) {
    for (auto x = 0; x <= 20; ++x) {
      auto poisson = std::exp(x * std::log(mu) - mu - std::lgamma(x + 1.0));
      EXPECT_NEAR(std::exp(negbin_log_pmf(x, mu, 1e8)), poisson, 1e-6);
      EXPECT_NEAR(negbin_log_pmf(x, mu, INFINITY), std::log(poisson), 1e-12);
    }
  }
}

TEST(NegbinLogPmf, ZeroMeanIsPointMass) {
  EXPECT_EQ(negbin_log_pmf(0, 0.0, 3.0), 0.0);
  EXPECT_EQ(negbin_log_pmf(2, 0.0, 3.0), -INFINITY);
}

TEST(NegbinLogPmf, NegativeCountIsDomainError) {
  EXPECT_THROW(negbin_log_pmf(-1, 1.0, 1.0), Domain_error);
}

TEST(NegbinLogPmf, SumsToOneOverGrid) {
  for (auto mu : {0.2, 4.0, 40.0}) {
    for (auto k : {0.3, 2.0, 50.0}) {
      auto total = 0.0;
      for (auto x = 0; x < 20000; ++x) {
        total += std::exp(negbin_log_pmf(x, mu, k));
      }
      EXPECT_NEAR(total, 1.0, 1e-10) << "mu " << mu << " k " << k;
    }
  }
}

TEST(NegbinLogPmf, GammaPoissonMixtureVariance) {
  // individual reproduction numbers from Gamma(mean mu, shape k), then Poisson thinning
  auto rng = make_stream(12);
  constexpr auto mu = 5.0;
  constexpr auto k = 0.16;
  constexpr auto n = 1000000;
  auto sum = 0.0;
  auto sum_sq = 0.0;
  for (auto i = 0; i < n; ++i) {
    auto lambda = draw_gamma(rng, k, k / mu);
    auto x = lambda > 0.0 ? static_cast<double>(std::poisson_distribution<long>{lambda}(rng)) : 0.0;
    sum += x;
    sum_sq += x * x;
  }
  auto mean = sum / n;
  auto var = (sum_sq - n * mean * mean) / (n - 1);
  EXPECT_NEAR(var, mu + mu * mu / k, 0.02 * (mu + mu * mu / k));
}

TEST(NegbinLogPmf, MixtureFrequenciesMatchPmf) {
  auto rng = make_stream(13);
  constexpr auto mu = 3.0;
  constexpr auto k = 1.5;
  constexpr auto n = 200000;
  auto counts = std::vector<int>(12, 0);
  for (auto i = 0; i < n; ++i) {
    auto x = draw_negbin(rng, mu, k);
    if (x < 12) {
      ++counts[x];
    }
  }
  for (auto x = 0; x < 12; ++x) {
    auto p = std::exp(negbin_log_pmf(x, mu, k));
    auto se = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(counts[x] / static_cast<double>(n), p, 5 * se) << x;
  }
}

}  // namespace
}  // namespace rtphase
