#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rtphase/likelihood.hpp"

namespace rtphase {

// Post-warmup draws of every chain, stored chain after chain. Per-day matrices are indexed
// [draw][day index]; `pointwise` is [draw][scored observation].
struct Posterior_draws {
  std::string model_id;
  Regime regime = Regime::deaths;
  int horizon = 0;
  int first_scored_day = 1;
  double population_n = 0.0;
  int n_chains = 0;

  std::vector<std::string> scalar_names;
  std::vector<int> chain;
  std::vector<int> iteration;
  std::vector<std::vector<double>> scalars;

  std::vector<std::vector<double>> phase_values;  // r_j
  std::vector<std::vector<double>> weights;       // stick weights (empty for fixed K)
  std::vector<std::vector<int>> labels;           // z_t

  std::vector<std::vector<double>> rt;
  std::vector<std::vector<double>> re;
  std::vector<std::vector<double>> infections;
  std::vector<std::vector<double>> fitted;  // expected observations
  std::vector<std::vector<double>> cumulative_infections;

  std::vector<std::vector<double>> pointwise;
  std::vector<double> loglik;
  std::vector<int> occupied;
  std::vector<std::uint8_t> contiguous;

  std::vector<double> acceptance;  // per chain, Metropolis steps only

  auto n_draws() const -> int { return static_cast<int>(chain.size()); }
  auto scalar_index(std::string_view name) const -> int;  // -1 when absent
  // One vector per chain.
  auto scalar_by_chain(std::string_view name) const -> std::vector<std::vector<double>>;

  // Checks matrix shapes, positivity of R_t and finiteness of the log-likelihoods.
  auto validate() const -> void;
};

struct Band {
  double median = 0.0;
  double lower50 = 0.0;
  double upper50 = 0.0;
  double lower95 = 0.0;
  double upper95 = 0.0;
};

// Linear-interpolation sample quantile (R type 7).
auto quantile(std::vector<double> values, double p) -> double;
auto summarize_band(std::span<const double> values) -> Band;
auto daily_bands(const std::vector<std::vector<double>>& per_draw) -> std::vector<Band>;

// Fraction of `truth` days from `from_day` (1-based) covered by the 95% band.
auto band_coverage(std::span<const Band> bands, std::span<const double> truth, int from_day = 1)
    -> double;

struct Occupied_count {
  int phases = 0;
  double probability = 0.0;
};
auto occupied_distribution(const Posterior_draws& draws) -> std::vector<Occupied_count>;
auto occupied_mode(const Posterior_draws& draws) -> int;
auto contiguity_fraction(const Posterior_draws& draws) -> double;

// Median over draws of each scalar named cp_1, cp_2, ... (fixed-K fits).
auto median_changepoints(const Posterior_draws& draws) -> std::vector<double>;

}  // namespace rtphase
