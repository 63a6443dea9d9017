#include <cmath>

#include <gtest/gtest.h>

#include "rtphase/adaptive_mh.hpp"
#include "rtphase/rng.hpp"

namespace rtphase {
namespace {

// Non-Gaussian 2-D target with moments computed on a fine grid.
auto log_target(std::span<const double> x) -> double {
  return -0.5 * (x[0] * x[0] + x[1] * x[1]) - 0.5 * x[0] * x[0] * x[1] * x[1] + 0.8 * x[0];
}

struct Moments {
  double mean_x = 0.0;
  double mean_y2 = 0.0;
  double mean_x2 = 0.0;
};

auto grid_moments() -> Moments {
  constexpr auto h = 0.01;
  auto z = 0.0;
  auto m = Moments{};
  for (auto x = -8.0; x <= 8.0; x += h) {
    for (auto y = -8.0; y <= 8.0; y += h) {
      auto p = std::exp(log_target(std::vector<double>{x, y}));
      z += p;
      m.mean_x += x * p;
      m.mean_x2 += x * x * p;
      m.mean_y2 += y * y * p;
    }
  }
  m.mean_x /= z;
  m.mean_x2 /= z;
  m.mean_y2 /= z;
  return m;
}

TEST(AdaptiveRandomWalk, MomentsMatchQuadrature) {
  auto truth = grid_moments();
  auto rng = make_stream(41);
  auto run = adaptive_random_walk(log_target, {0.0, 0.0}, 200000, 20000, rng);
  ASSERT_EQ(run.draws.size(), 180000U);
  auto m = Moments{};
  for (const auto& d : run.draws) {
    m.mean_x += d[0];
    m.mean_x2 += d[0] * d[0];
    m.mean_y2 += d[1] * d[1];
  }
  auto n = static_cast<double>(run.draws.size());
  EXPECT_NEAR(m.mean_x / n, truth.mean_x, 0.03);
  EXPECT_NEAR(m.mean_x2 / n, truth.mean_x2, 0.05);
  EXPECT_NEAR(m.mean_y2 / n, truth.mean_y2, 0.05);
  EXPECT_NEAR(run.acceptance_rate, 0.23, 0.06);
}

TEST(AdaptiveScale, ConvergesToTargetAcceptanceAndFreezes) {
  auto rng = make_stream(42);
  auto scale = Adaptive_scale{5.0};
  auto x = 0.0;
  for (auto i = 0; i < 20000; ++i) {
    auto y = x + scale.scale() * draw_normal(rng);
    auto accepted = metropolis_accept(rng, -0.5 * (y * y - x * x));
    if (accepted) {
      x = y;
    }
    scale.record(accepted, true);
  }
  auto frozen = scale.scale();
  scale.reset_counts();
  for (auto i = 0; i < 20000; ++i) {
    auto y = x + scale.scale() * draw_normal(rng);
    auto accepted = metropolis_accept(rng, -0.5 * (y * y - x * x));
    if (accepted) {
      x = y;
    }
    scale.record(accepted, false);
  }
  EXPECT_EQ(scale.scale(), frozen);
  EXPECT_NEAR(scale.acceptance_rate(), 0.23, 0.03);
}

TEST(AdaptiveBlock, LearnsCorrelatedGaussian) {
  constexpr auto rho = 0.95;
  auto target = [](std::span<const double> v) {
    return -0.5 * (v[0] * v[0] - 2.0 * rho * v[0] * v[1] + v[1] * v[1]) / (1.0 - rho * rho);
  };
  auto rng = make_stream(43);
  auto block = Adaptive_block{{0.1, 0.1}};
  auto x = std::vector<double>{0.0, 0.0};
  auto sxx = 0.0;
  auto sxy = 0.0;
  auto n = 0;
  for (auto i = 0; i < 60000; ++i) {
    auto y = block.propose(x, rng);
    auto accepted = metropolis_accept(rng, target(y) - target(x));
    if (accepted) {
      x = y;
    }
    auto adapting = i < 20000;
    block.record(x, accepted, adapting);
    if (!adapting) {
      sxx += x[0] * x[0];
      sxy += x[0] * x[1];
      ++n;
    }
  }
  EXPECT_NEAR(sxx / n, 1.0, 0.1);
  EXPECT_NEAR(sxy / n, rho, 0.1);
  EXPECT_GT(block.scale().acceptance_rate(), 0.15);
  EXPECT_LT(block.scale().acceptance_rate(), 0.35);
}

TEST(MetropolisAccept, EdgeCases) {
  auto rng = make_stream(44);
  for (auto i = 0; i < 100; ++i) {
    EXPECT_TRUE(metropolis_accept(rng, 0.0));
    EXPECT_FALSE(metropolis_accept(rng, NAN));
    EXPECT_FALSE(metropolis_accept(rng, -INFINITY));
  }
}

}  // namespace
}  // namespace rtphase
