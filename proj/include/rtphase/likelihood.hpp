#pragma once

// Observation models: observed infections scored against the renewal mean computed from the
// observed history, and observed deaths scored against the convolution of deterministic latent
// infections. `Trajectory_likelihood` caches one parameter state and re-evaluates only the days
// downstream of a change.

#include <span>
#include <string_view>
#include <vector>

#include "rtphase/epi_core.hpp"

namespace rtphase {

enum class Regime { infections, deaths };

auto regime_name(Regime regime) -> std::string_view;
auto parse_regime(std::string_view name) -> Regime;

struct Observation_data {
  Regime regime = Regime::deaths;
  std::vector<double> counts;  // observed infections or deaths; index 0 is model day 1
  int first_scored_day = 1;    // first day whose observation enters the likelihood
  double population_n = 0.0;
  Discretized_interval gi;
  Discretized_interval pi;     // deaths regime only
  std::vector<double> ifr;     // per day, deaths regime only
  int seed_days = 6;           // days 1..seed_days are seeded rather than renewed

  auto horizon() const -> int { return static_cast<int>(counts.size()); }

  // First scored day after regime-specific adjustment: under observed infections the seeded
  // days are conditioned on rather than scored.
  auto scored_from() const -> int;
  auto scored_days() const -> int { return horizon() - scored_from() + 1; }

  auto validate() const -> void;
};

struct Likelihood_terms {
  double total = 0.0;
  std::vector<double> pointwise;  // one entry per scored day
};

// Observed infections: c_t ~ NB(R_{t-1} (S_{t-1}/n) sum_{s<t} c_s g(t-s), k) with observed
// history plugged in.
auto log_likelihood_infections(const Observation_data& data, std::span<const double> rt_daily,
                               double dispersion_k) -> Likelihood_terms;

// Deterministic latent infections: `seed` per day over the seeding window, renewal means after.
auto latent_infections(const Observation_data& data, std::span<const double> rt_daily,
                       double seed) -> std::vector<double>;

// Observed deaths against IFR(t) * sum_i c_{t-i} pi(i) for a given infection trajectory.
auto log_likelihood_deaths_given_infections(const Observation_data& data,
                                            std::span<const double> infections,
                                            double dispersion_k) -> Likelihood_terms;

auto log_likelihood_deaths(const Observation_data& data, std::span<const double> rt_daily,
                           double dispersion_k, double seed) -> Likelihood_terms;

// Incremental evaluator. One current state plus at most one pending proposal; `accept()`
// commits the pending proposal, any other propose_* call discards it.
class Trajectory_likelihood {
 public:
  explicit Trajectory_likelihood(const Observation_data& data);

  auto reset(std::span<const double> rt_daily, double dispersion_k, double seed) -> double;

  // `first_changed` is the 0-based index of the first R_t entry that differs from current.
  auto propose_rt(std::span<const double> rt_daily, int first_changed) -> double;
  auto propose_day(int index, double rt_value) -> double;
  auto propose_dispersion(double dispersion_k) -> double;
  auto propose_seed(double seed) -> double;
  auto propose_rt_and_seed(std::span<const double> rt_daily, int first_changed, double seed)
      -> double;
  auto accept() -> void;

  auto data() const -> const Observation_data& { return *data_; }
  auto total() const -> double { return cur_.total; }
  auto pointwise() const -> std::span<const double>;
  auto rt() const -> std::span<const double> { return cur_.rt; }
  auto dispersion_k() const -> double { return cur_.k; }
  auto seed() const -> double { return cur_.seed; }

  // Latent infections (deaths regime) or renewal-mean infections (infections regime).
  auto infections() const -> std::span<const double> { return cur_.infections; }
  // Model mean of the observed series: expected deaths or expected infections.
  auto fitted() const -> std::span<const double> { return cur_.fitted; }
  // S_t after day t (index t - 1).
  auto susceptible(int index) const -> double;
  auto cumulative_infections() const -> std::span<const double> { return cur_.cumulative; }

 private:
  struct Buffers {
    std::vector<double> rt;
    std::vector<double> infections;
    std::vector<double> cumulative;
    std::vector<double> fitted;
    std::vector<double> pointwise;  // full horizon; unscored days hold 0
    std::vector<double> normaliser;
    double k = 1.0;
    double seed = 0.0;
    double total = 0.0;
  };
  enum class Pending { none, full, single_day };

  auto recompute(Buffers& buf, int first_changed_rt, bool normalisers) const -> void;
  auto score_day(const Buffers& buf, int index) const -> double;
  auto sum_pointwise(const Buffers& buf) const -> double;
  auto copy_into_candidate() -> void;

  const Observation_data* data_;
  int first_scored_index_ = 0;
  std::vector<double> observed_force_;        // infections regime: (S_{t-1}/n) sum c g
  std::vector<double> observed_cumulative_;   // infections regime
  Buffers cur_;
  Buffers cand_;
  Pending pending_ = Pending::none;
  int pending_index_ = 0;
  double pending_rt_ = 0.0;
  double pending_term_ = 0.0;
  double pending_total_ = 0.0;
  long single_day_accepts_ = 0;
};

}  // namespace rtphase
