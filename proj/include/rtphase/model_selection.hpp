#pragma once

#include <span>
#include <string>
#include <vector>

namespace rtphase {

// values[s][i] = log p(y_i | draw s).
struct Pointwise_loglik {
  std::vector<std::vector<double>> values;

  auto n_draws() const -> int { return static_cast<int>(values.size()); }
  auto n_observations() const -> int;
  // Rectangular and finite.
  auto validate() const -> void;
};

// Criteria are on the deviance scale (-2 x elpd); `pointwise` holds per-observation
// contributions on that scale and `se` = sqrt(N var(pointwise)).
struct Waic_result {
  double waic = 0.0;
  double p_waic = 0.0;
  double lppd = 0.0;
  double se = 0.0;
  std::vector<double> pointwise;
};

struct Loo_result {
  double loo = 0.0;
  double elpd = 0.0;
  double se = 0.0;
  std::vector<double> pointwise;
  std::vector<double> pareto_k;  // NaN when the tail was not fitted
  int n_unreliable = 0;          // k > 0.7 or undefined
};

auto waic(const Pointwise_loglik& ll) -> Waic_result;
auto psis_loo(const Pointwise_loglik& ll) -> Loo_result;

struct Gpd_fit {
  double k = 0.0;
  double sigma = 0.0;
};
// Zhang-Stephens profile-posterior estimate of a generalized Pareto fitted to exceedances,
// with the weakly informative shrinkage of k towards 0.5.
auto fit_generalized_pareto(std::vector<double> exceedances) -> Gpd_fit;

struct Smoothed_weights {
  std::vector<double> log_weights;  // not normalised
  double pareto_k = 0.0;
};
// Pareto-smoothed log importance weights for one observation; input are raw log ratios.
auto pareto_smooth(std::span<const double> log_ratios) -> Smoothed_weights;

struct Model_result {
  std::string id;
  Waic_result waic;
  Loo_result loo;
};

struct Pairwise_difference {
  std::string better;
  std::string worse;
  double d_waic = 0.0;
  double se = 0.0;
  bool indistinguishable = false;  // |d_waic| < 2 se
};

struct Ranking_row {
  std::string id;
  double waic = 0.0;
  double waic_se = 0.0;
  double p_waic = 0.0;
  double loo = 0.0;
  double loo_se = 0.0;
  int n_unreliable = 0;
  double d_waic = 0.0;  // against the winner
  double d_waic_se = 0.0;
  double d_loo = 0.0;
  bool indistinguishable = false;  // from the winner
};

struct Ranking {
  std::vector<Ranking_row> rows;  // ascending WAIC, LOO breaking ties
  std::vector<Pairwise_difference> pairs;
  std::string winner;
  std::string loo_winner;
  bool criteria_disagree = false;
};

auto rank_models(const std::vector<Model_result>& results) -> Ranking;

}  // namespace rtphase
