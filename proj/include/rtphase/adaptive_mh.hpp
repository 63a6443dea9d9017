#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rtphase/rng.hpp"

namespace rtphase {

// Random-walk proposal scale tuned by Robbins-Monro towards a target acceptance rate while
// adapting, fixed afterwards.
class Adaptive_scale {
 public:
  explicit Adaptive_scale(double initial_scale = 0.1, double target_acceptance = 0.23);

  auto scale() const -> double;
  auto record(bool accepted, bool adapting) -> void;

  auto proposals() const -> long { return proposals_; }
  auto accepted() const -> long { return accepted_; }
  auto acceptance_rate() const -> double;
  auto reset_counts() -> void;

 private:
  double log_scale_;
  double target_;
  long adapt_steps_ = 0;
  long proposals_ = 0;
  long accepted_ = 0;
};

// Joint Gaussian random walk whose covariance is the running covariance of the visited states
// (Haario et al. style), scaled by an Adaptive_scale. Learns only while adapting, so the
// proposal is fixed once warmup ends.
class Adaptive_block {
 public:
  // `initial_sd` gives the diagonal proposal used until enough states have been seen.
  explicit Adaptive_block(std::vector<double> initial_sd, double target_acceptance = 0.23);

  auto dimension() const -> int { return static_cast<int>(initial_sd_.size()); }
  auto propose(std::span<const double> x, Random_stream& rng) const -> std::vector<double>;
  // `state` is the chain state after the step.
  auto record(std::span<const double> state, bool accepted, bool adapting) -> void;
  auto scale() const -> const Adaptive_scale& { return scale_; }

 private:
  auto refresh_factor() -> void;

  std::vector<double> initial_sd_;
  Adaptive_scale scale_;
  long n_seen_ = 0;
  std::vector<double> mean_;
  std::vector<double> comoment_;  // d x d, row-major
  std::vector<double> factor_;    // lower Cholesky factor of the proposal covariance
  bool learned_ = false;
};

// log u < log_ratio; NaN ratios reject.
auto metropolis_accept(Random_stream& rng, double log_ratio) -> bool;

struct Random_walk_run {
  std::vector<std::vector<double>> draws;  // post-warmup, one row per iteration
  std::vector<double> scales;
  double acceptance_rate = 0.0;
};

// Componentwise adaptive random-walk Metropolis on an unconstrained target.
auto adaptive_random_walk(const std::function<double(std::span<const double>)>& log_target,
                          std::vector<double> initial, int n_iterations, int n_warmup,
                          Random_stream& rng, double target_acceptance = 0.23)
    -> Random_walk_run;

}  // namespace rtphase
