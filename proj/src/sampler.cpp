#include "rtphase/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <thread>

#include <boost/math/distributions/poisson.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "rtphase/adaptive_mh.hpp"
#include "rtphase/errors.hpp"

namespace rtphase {

namespace {

constexpr auto k_neg_inf = -std::numeric_limits<double>::infinity();

// log density of log x when x ~ Exponential(mean), Jacobian included
auto log_exponential_of_log(double log_x, double mean) -> double {
  return log_x - std::exp(log_x) / mean;
}

auto distinct_labels(std::span<const int> labels, int cap) -> int {
  auto seen = std::vector<char>(static_cast<std::size_t>(cap), 0);
  auto n = 0;
  for (auto z : labels) {
    if (!seen[z]) {
      seen[z] = 1;
      ++n;
    }
  }
  return n;
}

auto labels_contiguous(std::span<const int> labels, int cap) -> bool {
  auto seen = std::vector<char>(static_cast<std::size_t>(cap), 0);
  for (auto t = std::size_t{0}; t != labels.size(); ++t) {
    if (t > 0 && labels[t] == labels[t - 1]) {
      continue;
    }
    if (seen[labels[t]]) {
      return false;
    }
    seen[labels[t]] = 1;
  }
  return true;
}

struct Chain_result {
  std::vector<int> iteration;
  std::vector<std::vector<double>> scalars;
  std::vector<std::vector<double>> phase_values;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<int>> labels;
  std::vector<std::vector<double>> rt;
  std::vector<std::vector<double>> re;
  std::vector<std::vector<double>> infections;
  std::vector<std::vector<double>> fitted;
  std::vector<std::vector<double>> cumulative;
  std::vector<std::vector<double>> pointwise;
  std::vector<double> loglik;
  std::vector<int> occupied;
  std::vector<std::uint8_t> contiguous;
  double acceptance = 0.0;
  std::string snapshot;
};

class Chain {
 public:
  Chain(const Observation_data& data, const Fit_config& config, int index);

  auto run() -> Chain_result;
  auto scalar_names() const -> std::vector<std::string>;

 private:
  auto horizon() const -> int { return data_.horizon(); }
  auto current_loglik() const -> double { return prior_only_ ? 0.0 : like_.total(); }
  auto propose_rt(std::span<const double> candidate, int first_changed) -> double;
  auto commit_rt(std::span<const double> candidate) -> void;

  auto initialise_common() -> void;
  auto initialise_fixed_k() -> void;
  auto initialise_mixture() -> void;
  auto initial_seed() const -> double;

  auto sweep(bool adapting) -> void;
  auto update_dispersion(bool adapting) -> void;
  auto update_seed(bool adapting) -> void;

  auto phase_range(int j) const -> std::pair<int, int>;
  auto update_fixed_value(int j, bool adapting) -> void;
  auto try_changepoints(const std::vector<double>& candidate) -> bool;
  auto update_changepoint(int i, bool adapting) -> void;
  auto joint_state() const -> std::vector<double>;
  auto update_joint_block(bool adapting) -> void;

  auto refresh_weights() -> bool;
  auto recount() -> void;
  auto update_labels() -> void;
  auto update_mixture_values(bool adapting) -> void;
  auto run_bounds(int day) const -> std::pair<int, int>;
  auto try_run_labels(int begin, int end, int to, double extra_log_ratio) -> bool;
  auto update_runs() -> void;
  auto update_pp_sticks(bool adapting) -> void;
  auto update_dp_sticks() -> void;
  auto stick_log_prior_of_labels(std::span<const double> log_w) const -> double;

  auto record(Chain_result& out, int iteration) -> void;
  auto snapshot() const -> std::string;
  auto count_step(bool accepted) -> void;

  const Observation_data& data_;
  const Fit_config& config_;
  const Model_spec& model_;
  int index_;
  Random_stream rng_;
  Trajectory_likelihood like_;
  bool prior_only_;
  bool sample_dispersion_;
  bool sample_seed_;
  bool adapting_ = true;
  long mh_proposals_ = 0;
  long mh_accepted_ = 0;

  double k_ = 5.0;
  double seed_ = 0.0;
  Adaptive_scale k_scale_;
  Adaptive_scale seed_scale_;
  std::vector<double> rt_;
  std::vector<double> candidate_;

  std::vector<double> r_;
  std::vector<Adaptive_scale> r_scale_;

  std::vector<double> cp_;
  std::vector<Adaptive_scale> cp_scale_;
  std::optional<Adaptive_block> joint_block_;

  int cap_ = 0;
  std::vector<int> z_;
  std::vector<int> counts_;
  std::vector<double> log_w_;
  std::vector<double> durations_;
  Adaptive_scale duration_scale_;
  int n_sticks_ = 0;
  double lambda_ = 0.0;
  std::vector<double> betas_;
  double theta_ = 1.0;
  std::vector<double> scratch_;
};

Chain::Chain(const Observation_data& data, const Fit_config& config, int index)
    : data_{data},
      config_{config},
      model_{config.model},
      index_{index},
      rng_{make_stream(config.rng_seed, static_cast<std::uint64_t>(index))},
      like_{data},
      prior_only_{config.prior_only},
      sample_dispersion_{!config.fixed_dispersion.has_value()},
      sample_seed_{data.regime == Regime::deaths},
      k_scale_{config.adaptation.initial_scale, config.adaptation.target_acceptance},
      seed_scale_{config.adaptation.initial_scale, config.adaptation.target_acceptance},
      duration_scale_{0.5, config.adaptation.target_acceptance} {
  initialise_common();
  if (model_.kind == Model_kind::fixed_k) {
    initialise_fixed_k();
  } else {
    initialise_mixture();
  }
  if (!prior_only_) {
    auto total = like_.reset(rt_, k_, seed_);
    if (!std::isfinite(total)) {
      auto pw = like_.pointwise();
      auto bad = std::find_if(pw.begin(), pw.end(), [](double v) { return !std::isfinite(v); });
      auto day = data_.scored_from() + static_cast<int>(bad - pw.begin());
      throw Fit_error{fmt::format(
          "the observation on day {} has zero probability under any R_t (no earlier counts "
          "to drive it); move the start day later",
          day)};
    }
  }
}

auto Chain::count_step(bool accepted) -> void {
  if (!adapting_) {
    ++mh_proposals_;
    if (accepted) {
      ++mh_accepted_;
    }
  }
}

auto Chain::propose_rt(std::span<const double> candidate, int first_changed) -> double {
  if (prior_only_) {
    return 0.0;
  }
  return like_.propose_rt(candidate, first_changed);
}

auto Chain::commit_rt(std::span<const double> candidate) -> void {
  std::copy(candidate.begin(), candidate.end(), rt_.begin());
  if (!prior_only_) {
    like_.accept();
  }
}

auto Chain::initialise_common() -> void {
  rt_.assign(static_cast<std::size_t>(horizon()), 1.0);
  candidate_ = rt_;
  k_ = config_.fixed_dispersion.value_or(config_.dispersion_prior_mean);
  seed_ = 0.0;
}

auto Chain::initialise_fixed_k() -> void {
  const auto& prior = model_.fixed_k;
  auto k = prior.k_phases;
  auto t = static_cast<double>(horizon());
  cp_.assign(static_cast<std::size_t>(k - 1), 0.0);
  for (auto i = 0; i < k - 1; ++i) {
    cp_[i] = t * (i + 1) / k + (index_ == 0 ? 0.0 : 6.0 * (draw_uniform(rng_) - 0.5));
  }
  if (!std::isfinite(fixedk_changepoints_logprior(cp_, t, prior))) {
    auto attempts = 0;
    do {
      if (++attempts > 100000) {
        throw Domain_error{fmt::format("cannot place {} changepoints in {} days under the prior",
                                       k - 1, horizon())};
      }
      auto previous = prior.t1_lower + (t - prior.t1_lower) * draw_uniform(rng_);
      for (auto i = 0; i < k - 1; ++i) {
        cp_[i] = previous;
        previous += prior.gap_upper * draw_uniform(rng_);
      }
    } while (!std::isfinite(fixedk_changepoints_logprior(cp_, t, prior)));
  }

  auto crude = crude_rt(data_);
  r_.assign(static_cast<std::size_t>(k), 1.0);
  for (auto j = 0; j < k; ++j) {
    auto [b, e] = phase_range(j);
    if (b < e) {
      r_[j] = quantile(std::vector<double>(crude.begin() + b, crude.begin() + e), 0.5);
    }
    if (index_ > 0) {
      r_[j] *= std::exp(0.05 * draw_normal(rng_));
    }
  }
  r_scale_.assign(static_cast<std::size_t>(k),
                  Adaptive_scale{config_.adaptation.initial_scale,
                                 config_.adaptation.target_acceptance});
  cp_scale_.assign(static_cast<std::size_t>(std::max(k - 1, 0)),
                   Adaptive_scale{5.0, config_.adaptation.target_acceptance});
  rt_ = daily_rt_from_changepoints(r_, cp_, horizon());

  if (sample_seed_) {
    seed_ = initial_seed();
  }
  auto sd = std::vector<double>(sample_seed_ ? 1 : 0, 0.1);
  sd.insert(sd.end(), r_.size(), 0.05);
  sd.insert(sd.end(), cp_.size(), 2.0);
  joint_block_.emplace(sd, config_.adaptation.target_acceptance);
}

// Layout: [log seed (deaths regime)], log r_1..log r_K, cp_1..cp_{K-1}.
auto Chain::joint_state() const -> std::vector<double> {
  auto x = std::vector<double>{};
  if (sample_seed_) {
    x.push_back(std::log(seed_));
  }
  for (auto r : r_) {
    x.push_back(std::log(r));
  }
  x.insert(x.end(), cp_.begin(), cp_.end());
  return x;
}

auto Chain::update_joint_block(bool adapting) -> void {
  auto x = joint_state();
  auto y = joint_block_->propose(x, rng_);
  auto offset = sample_seed_ ? 1 : 0;
  auto k = std::ssize(r_);
  auto new_seed = sample_seed_ ? std::exp(y[0]) : seed_;
  auto r = std::vector<double>(r_.size());
  auto cp = std::vector<double>(y.begin() + offset + k, y.end());
  auto t = static_cast<double>(horizon());
  const auto& prior = model_.fixed_k;
  auto lp_new = fixedk_changepoints_logprior(cp, t, prior);
  auto lp_old = fixedk_changepoints_logprior(cp_, t, prior);
  auto valid = std::isfinite(lp_new) && std::isfinite(new_seed) && new_seed > 0.0;
  for (auto j = 0; j < k; ++j) {
    r[j] = std::exp(y[offset + j]);
    valid = valid && std::isfinite(r[j]) && r[j] > 0.0;
    lp_new += prior.r_prior.log_density_of_log(y[offset + j]);
    lp_old += prior.r_prior.log_density_of_log(x[offset + j]);
  }
  if (sample_seed_) {
    lp_new += log_exponential_of_log(y[0], config_.seed_prior_mean);
    lp_old += log_exponential_of_log(x[0], config_.seed_prior_mean);
  }
  auto accepted = false;
  if (valid) {
    auto daily = daily_rt_from_changepoints(r, cp, horizon());
    auto ll_old = current_loglik();
    auto ll_new = prior_only_ ? 0.0 : like_.propose_rt_and_seed(daily, 0, new_seed);
    accepted = metropolis_accept(rng_, ll_new - ll_old + lp_new - lp_old);
    if (accepted) {
      seed_ = new_seed;
      r_ = std::move(r);
      cp_ = std::move(cp);
      commit_rt(daily);
    }
  }
  joint_block_->record(joint_state(), accepted, adapting);
  count_step(accepted);
}

// Death means are linear in the seed until depletion bites, so one evaluation at seed 1 gives
// the level matching the observed total.
auto Chain::initial_seed() const -> double {
  auto latent = latent_infections(data_, rt_, 1.0);
  auto observed = 0.0;
  auto expected = 0.0;
  auto pi = data_.pi.masses();
  for (auto day = data_.scored_from(); day <= horizon(); ++day) {
    observed += data_.counts[day - 1];
    auto s = 0.0;
    for (auto lag = 1; lag <= std::min<int>(day - 1, pi.size()); ++lag) {
      s += latent[day - 1 - lag] * pi[lag - 1];
    }
    expected += data_.ifr[day - 1] * s;
  }
  return expected > 0.0 ? std::clamp(observed / expected, 1e-3, 1e6) : config_.seed_prior_mean;
}

auto Chain::initialise_mixture() -> void {
  auto t = horizon();
  auto rprior = model_.kind == Model_kind::pp ? model_.pp.r_prior : model_.dp.r_prior;
  cap_ = model_.kind == Model_kind::pp ? model_.pp.k_max : model_.dp.truncation;
  auto blocks = std::clamp(std::min(10, t), 1, cap_);

  auto crude = crude_rt(data_);
  r_.assign(static_cast<std::size_t>(cap_), 1.0);
  z_.assign(static_cast<std::size_t>(t), 0);
  for (auto day = 0; day < t; ++day) {
    z_[day] = std::min(blocks - 1, static_cast<int>(static_cast<long>(day) * blocks / t));
  }
  for (auto j = 0; j < cap_; ++j) {
    if (j < blocks) {
      auto values = std::vector<double>{};
      for (auto day = 0; day < t; ++day) {
        if (z_[day] == j) {
          values.push_back(crude[day]);
        }
      }
      r_[j] = values.empty() ? 1.0 : quantile(values, 0.5);
      if (index_ > 0) {
        r_[j] *= std::exp(0.05 * draw_normal(rng_));
      }
    } else {
      r_[j] = rprior.sample(rng_);
    }
  }
  r_scale_.assign(static_cast<std::size_t>(cap_),
                  Adaptive_scale{config_.adaptation.initial_scale,
                                 config_.adaptation.target_acceptance});

  if (model_.kind == Model_kind::pp) {
    const auto& prior = model_.pp;
    if (prior.fixed_lambda) {
      auto mean = *prior.fixed_lambda * t;
      auto tail = 1.0;
      if (mean > 0.0) {
        tail = boost::math::cdf(boost::math::complement(boost::math::poisson_distribution<>{mean},
                                                        static_cast<double>(prior.k_max - 1)));
      }
      if (!(mean > 0.0) || tail > 1e-6) {
        throw Truncation_overflow{fmt::format(
            "fixed lambda {} gives an expected {} phases over {} days, beyond the truncation "
            "at {} phases",
            *prior.fixed_lambda, mean + 1.0, t, prior.k_max)};
      }
      lambda_ = *prior.fixed_lambda;
    } else {
      lambda_ = static_cast<double>(blocks) / t;
    }
    durations_.assign(static_cast<std::size_t>(cap_), 0.0);
    auto total = 0.0;
    for (auto i = 0; i < blocks - 1; ++i) {
      durations_[i] = static_cast<double>(t) / blocks;
      total += durations_[i];
    }
    durations_[blocks - 1] = (t - total) + draw_exponential(rng_, lambda_);
    for (auto i = blocks; i < cap_; ++i) {
      durations_[i] = draw_exponential(rng_, lambda_);
    }
  } else {
    const auto& prior = model_.dp;
    theta_ = prior.fixed_theta.value_or(1.0);
    betas_.assign(static_cast<std::size_t>(std::max(cap_ - 1, 0)), 0.5);
    // equal weight on the initial blocks, prior draws beyond them
    for (auto l = 0; l < cap_ - 1; ++l) {
      betas_[l] = l < blocks ? 1.0 / (blocks + 1 - l) : draw_beta(rng_, 1.0, theta_);
    }
  }
  refresh_weights();
  recount();
  for (auto day = 0; day < t; ++day) {
    rt_[day] = r_[z_[day]];
  }
  if (sample_seed_) {
    seed_ = initial_seed();
  }
}

auto Chain::update_dispersion(bool adapting) -> void {
  if (!sample_dispersion_) {
    return;
  }
  auto old_log = std::log(k_);
  auto new_log = old_log + k_scale_.scale() * draw_normal(rng_);
  auto new_k = std::exp(new_log);
  auto ll_old = current_loglik();
  auto ll_new = prior_only_ ? 0.0 : like_.propose_dispersion(new_k);
  auto ratio = ll_new - ll_old + log_exponential_of_log(new_log, config_.dispersion_prior_mean) -
               log_exponential_of_log(old_log, config_.dispersion_prior_mean);
  auto accepted = std::isfinite(new_k) && new_k > 0.0 && metropolis_accept(rng_, ratio);
  if (accepted) {
    k_ = new_k;
    if (!prior_only_) {
      like_.accept();
    }
  }
  k_scale_.record(accepted, adapting);
  count_step(accepted);
}

auto Chain::update_seed(bool adapting) -> void {
  if (!sample_seed_) {
    return;
  }
  auto old_log = std::log(seed_);
  auto new_log = old_log + seed_scale_.scale() * draw_normal(rng_);
  auto new_seed = std::exp(new_log);
  auto ll_old = current_loglik();
  auto ll_new = prior_only_ ? 0.0 : like_.propose_seed(new_seed);
  auto ratio = ll_new - ll_old + log_exponential_of_log(new_log, config_.seed_prior_mean) -
               log_exponential_of_log(old_log, config_.seed_prior_mean);
  auto accepted = new_seed > 0.0 && std::isfinite(new_seed) && metropolis_accept(rng_, ratio);
  if (accepted) {
    seed_ = new_seed;
    if (!prior_only_) {
      like_.accept();
    }
  }
  seed_scale_.record(accepted, adapting);
  count_step(accepted);
}

// [begin, end) day indices of fixed-K phase j
auto Chain::phase_range(int j) const -> std::pair<int, int> {
  auto t = horizon();
  auto k = static_cast<int>(cp_.size()) + 1;
  auto b = j == 0 ? 0 : std::clamp(static_cast<int>(std::floor(cp_[j - 1])), 0, t);
  auto e = j == k - 1 ? t : std::clamp(static_cast<int>(std::floor(cp_[j])), 0, t);
  return {b, std::max(b, e)};
}

auto Chain::update_fixed_value(int j, bool adapting) -> void {
  const auto& prior = model_.fixed_k.r_prior;
  auto& scale = r_scale_[j];
  auto old_log = std::log(r_[j]);
  auto new_log = old_log + scale.scale() * draw_normal(rng_);
  auto new_r = std::exp(new_log);
  auto [b, e] = phase_range(j);
  auto ll_old = current_loglik();
  auto ll_new = ll_old;
  if (b < e) {
    candidate_ = rt_;
    std::fill(candidate_.begin() + b, candidate_.begin() + e, new_r);
    ll_new = propose_rt(candidate_, b);
  }
  auto ratio = ll_new - ll_old + prior.log_density_of_log(new_log) -
               prior.log_density_of_log(old_log);
  auto accepted = new_r > 0.0 && std::isfinite(new_r) && metropolis_accept(rng_, ratio);
  if (accepted) {
    r_[j] = new_r;
    if (b < e) {
      commit_rt(candidate_);
    }
  }
  scale.record(accepted, adapting);
  count_step(accepted);
}

auto Chain::try_changepoints(const std::vector<double>& candidate) -> bool {
  auto t = static_cast<double>(horizon());
  auto lp_new = fixedk_changepoints_logprior(candidate, t, model_.fixed_k);
  if (!std::isfinite(lp_new)) {
    return false;
  }
  auto lp_old = fixedk_changepoints_logprior(cp_, t, model_.fixed_k);
  auto daily = daily_rt_from_changepoints(r_, candidate, horizon());
  auto first = 0;
  while (first < horizon() && daily[first] == rt_[first]) {
    ++first;
  }
  auto ll_old = current_loglik();
  auto ll_new = first < horizon() ? propose_rt(daily, first) : ll_old;
  if (!metropolis_accept(rng_, ll_new - ll_old + lp_new - lp_old)) {
    return false;
  }
  cp_ = candidate;
  if (first < horizon()) {
    commit_rt(daily);
  }
  return true;
}

auto Chain::update_changepoint(int i, bool adapting) -> void {
  auto& scale = cp_scale_[i];
  auto candidate = cp_;
  candidate[i] += scale.scale() * draw_normal(rng_);
  auto accepted = try_changepoints(candidate);
  scale.record(accepted, adapting);
  count_step(accepted);

  // independence draw between the neighbouring changepoints
  auto k = static_cast<int>(cp_.size());
  auto lo = i == 0 ? model_.fixed_k.t1_lower : cp_[i - 1];
  auto hi = i == k - 1 ? static_cast<double>(horizon()) : cp_[i + 1];
  if (hi > lo) {
    candidate = cp_;
    candidate[i] = lo + (hi - lo) * draw_uniform(rng_);
    count_step(try_changepoints(candidate));
  }
}

auto Chain::refresh_weights() -> bool {
  log_w_.assign(static_cast<std::size_t>(cap_), k_neg_inf);
  if (model_.kind == Model_kind::pp) {
    auto sticks = pp_stick_weights(durations_, horizon(), cap_);
    n_sticks_ = sticks.k;
    for (auto j = 0; j < sticks.k; ++j) {
      log_w_[j] = sticks.weights[j] > 0.0 ? std::log(sticks.weights[j]) : k_neg_inf;
    }
  } else {
    auto w = dp_stick_weights(betas_);
    n_sticks_ = cap_;
    for (auto j = 0; j < cap_; ++j) {
      log_w_[j] = w[j] > 0.0 ? std::log(w[j]) : k_neg_inf;
    }
  }
  return true;
}

auto Chain::recount() -> void {
  counts_.assign(static_cast<std::size_t>(cap_), 0);
  for (auto z : z_) {
    ++counts_[z];
  }
}

auto Chain::stick_log_prior_of_labels(std::span<const double> log_w) const -> double {
  auto total = 0.0;
  for (auto j = 0; j < cap_; ++j) {
    if (counts_[j] > 0) {
      if (!std::isfinite(log_w[j])) {
        return k_neg_inf;
      }
      total += counts_[j] * log_w[j];
    }
  }
  return total;
}

auto Chain::update_labels() -> void {
  auto t = horizon();
  if (prior_only_) {
    for (auto day = 0; day < t; ++day) {
      z_[day] = draw_categorical_log(rng_, log_w_.data(), cap_);
      rt_[day] = r_[z_[day]];
    }
  } else if (data_.regime == Regime::infections) {
    gibbs_update_labels(z_, r_, log_w_, like_, rng_);
    auto current = like_.rt();
    std::copy(current.begin(), current.end(), rt_.begin());
  } else {
    // tail recomputes make exact enumeration over every label too slow here; propose the
    // label from the weights and accept on the likelihood ratio
    for (auto day = 0; day < t; ++day) {
      auto proposal = draw_categorical_log(rng_, log_w_.data(), cap_);
      if (proposal == z_[day] || r_[proposal] == rt_[day]) {
        z_[day] = proposal;
        continue;
      }
      auto ll_old = like_.total();
      auto ll_new = like_.propose_day(day, r_[proposal]);
      if (metropolis_accept(rng_, ll_new - ll_old)) {
        like_.accept();
        z_[day] = proposal;
        rt_[day] = r_[proposal];
      }
    }
  }
  recount();
}

auto Chain::update_mixture_values(bool adapting) -> void {
  const auto& prior = model_.kind == Model_kind::pp ? model_.pp.r_prior : model_.dp.r_prior;
  auto t = horizon();
  for (auto j = 0; j < cap_; ++j) {
    if (counts_[j] == 0) {
      r_[j] = prior.sample(rng_);
      continue;
    }
    auto& scale = r_scale_[j];
    auto old_log = std::log(r_[j]);
    auto new_log = old_log + scale.scale() * draw_normal(rng_);
    auto new_r = std::exp(new_log);
    candidate_ = rt_;
    auto first = t;
    for (auto day = 0; day < t; ++day) {
      if (z_[day] == j) {
        candidate_[day] = new_r;
        first = std::min(first, day);
      }
    }
    auto ll_old = current_loglik();
    auto ll_new = propose_rt(candidate_, first);
    auto ratio = ll_new - ll_old + prior.log_density_of_log(new_log) -
                 prior.log_density_of_log(old_log);
    auto accepted = new_r > 0.0 && std::isfinite(new_r) && metropolis_accept(rng_, ratio);
    if (accepted) {
      r_[j] = new_r;
      commit_rt(candidate_);
    }
    scale.record(accepted, adapting);
    count_step(accepted);
  }
}

// [begin, end) of the maximal run of equal labels containing `day`.
auto Chain::run_bounds(int day) const -> std::pair<int, int> {
  auto b = day;
  auto e = day + 1;
  while (b > 0 && z_[b - 1] == z_[day]) {
    --b;
  }
  while (e < horizon() && z_[e] == z_[day]) {
    ++e;
  }
  return {b, e};
}

auto Chain::try_run_labels(int begin, int end, int to, double extra_log_ratio) -> bool {
  auto from = z_[begin];
  auto n = end - begin;
  candidate_ = rt_;
  std::fill(candidate_.begin() + begin, candidate_.begin() + end, r_[to]);
  auto ll_old = current_loglik();
  auto ll_new = propose_rt(candidate_, begin);
  auto ratio = ll_new - ll_old + n * (log_w_[to] - log_w_[from]) + extra_log_ratio;
  if (!metropolis_accept(rng_, ratio)) {
    return false;
  }
  std::fill(z_.begin() + begin, z_.begin() + end, to);
  counts_[from] -= n;
  counts_[to] += n;
  commit_rt(candidate_);
  return true;
}

// Moves whole runs of days between components. Day-by-day label updates cannot open a new
// component for a long phase because an empty component carries almost no weight.
//  relabel: a run moves to another occupied label, which must not border the run and the
//    source label must stay occupied, so the reverse move selects the same run.
//  split: a run whose label stays occupied moves to an empty component whose value is
//    proposed near the run's current value.
//  merge: a run that is the only use of its label moves to an occupied label not bordering
//    it, and the emptied component's value is redrawn from the prior.
auto Chain::update_runs() -> void {
  const auto& prior = model_.kind == Model_kind::pp ? model_.pp.r_prior : model_.dp.r_prior;
  constexpr auto split_sd = 0.2;
  auto t = horizon();
  auto usable = [&](int j) { return std::isfinite(log_w_[j]); };
  auto borders = [&](int b, int e, int label) {
    return (b > 0 && z_[b - 1] == label) || (e < t && z_[e] == label);
  };
  auto occupied_except = [&](int excluded) {
    auto labels = std::vector<int>{};
    for (auto j = 0; j < cap_; ++j) {
      if (j != excluded && counts_[j] > 0) {
        labels.push_back(j);
      }
    }
    return labels;
  };
  auto pick = [&](const std::vector<int>& labels) {
    return labels[static_cast<std::size_t>(draw_uniform(rng_) * labels.size()) %
                  labels.size()];
  };

  for (auto attempt = 0; attempt < 3; ++attempt) {
    auto day = std::min(t - 1, static_cast<int>(draw_uniform(rng_) * t));
    auto [b, e] = run_bounds(day);
    auto a = z_[day];
    auto n = e - b;
    auto others = occupied_except(a);

    // relabel
    if (!others.empty() && counts_[a] > n) {
      auto c = pick(others);
      count_step(!borders(b, e, c) && usable(c) && try_run_labels(b, e, c, 0.0));
    }

    day = std::min(t - 1, static_cast<int>(draw_uniform(rng_) * t));
    std::tie(b, e) = run_bounds(day);
    a = z_[day];
    n = e - b;
    auto empty = std::vector<int>{};
    for (auto j = 0; j < cap_; ++j) {
      if (counts_[j] == 0 && usable(j)) {
        empty.push_back(j);
      }
    }
    if (draw_uniform(rng_) < 0.5) {
      // split
      if (empty.empty() || counts_[a] == n) {
        continue;
      }
      auto j = pick(empty);
      auto n_empty = static_cast<double>(empty.size());
      auto n_occupied = static_cast<double>(occupied_except(-1).size());
      auto old_value = r_[j];
      auto log_new = std::log(r_[a]) + split_sd * draw_normal(rng_);
      auto log_q = -0.5 * std::pow((log_new - std::log(r_[a])) / split_sd, 2) -
                   std::log(split_sd) - 0.5 * std::log(2.0 * std::numbers::pi);
      r_[j] = std::exp(log_new);
      auto extra = prior.log_density_of_log(log_new) - log_q + std::log(n_empty / n_occupied);
      auto accepted = try_run_labels(b, e, j, extra);
      if (!accepted) {
        r_[j] = old_value;
      }
      count_step(accepted);
    } else {
      // merge
      if (counts_[a] != n) {
        continue;
      }
      auto targets = occupied_except(a);
      if (targets.empty()) {
        continue;
      }
      auto c = pick(targets);
      if (borders(b, e, c)) {
        count_step(false);
        continue;
      }
      // after the merge `a` is empty: empty labels grow by one, occupied labels drop by one
      auto n_empty_after = static_cast<double>(empty.size() + 1);
      auto n_occupied_after = static_cast<double>(targets.size());
      auto log_old = std::log(r_[a]);
      auto log_q = -0.5 * std::pow((log_old - std::log(r_[c])) / split_sd, 2) -
                   std::log(split_sd) - 0.5 * std::log(2.0 * std::numbers::pi);
      auto extra = -(prior.log_density_of_log(log_old) - log_q +
                     std::log(n_empty_after / n_occupied_after));
      auto accepted = try_run_labels(b, e, c, extra);
      if (accepted) {
        r_[a] = prior.sample(rng_);
      }
      count_step(accepted);
    }
  }
}

auto Chain::update_pp_sticks(bool adapting) -> void {
  const auto& prior = model_.pp;
  auto t = static_cast<double>(horizon());
  auto current_z = stick_log_prior_of_labels(log_w_);

  auto evaluate = [&](std::vector<double>& proposal) -> double {
    try {
      auto sticks = pp_stick_weights(proposal, t, cap_);
      scratch_.assign(static_cast<std::size_t>(cap_), k_neg_inf);
      for (auto j = 0; j < sticks.k; ++j) {
        scratch_[j] = sticks.weights[j] > 0.0 ? std::log(sticks.weights[j]) : k_neg_inf;
      }
      return stick_log_prior_of_labels(scratch_);
    } catch (const Truncation_overflow&) {
      return k_neg_inf;
    }
  };

  auto proposal = durations_;
  for (auto i = 0; i < n_sticks_; ++i) {
    auto old = durations_[i];
    auto step = duration_scale_.scale() * draw_normal(rng_);
    proposal[i] = old * std::exp(step);
    auto z_new = evaluate(proposal);
    auto ratio = z_new - current_z - lambda_ * (proposal[i] - old) + step;
    auto accepted = std::isfinite(z_new) && metropolis_accept(rng_, ratio);
    if (accepted) {
      durations_[i] = proposal[i];
      refresh_weights();
      current_z = z_new;
    } else {
      proposal[i] = old;
    }
    duration_scale_.record(accepted, adapting);
    count_step(accepted);

    proposal[i] = draw_exponential(rng_, lambda_);
    z_new = evaluate(proposal);
    if (std::isfinite(z_new) && metropolis_accept(rng_, z_new - current_z)) {
      durations_[i] = proposal[i];
      refresh_weights();
      current_z = z_new;
      count_step(true);
    } else {
      proposal[i] = durations_[i];
      count_step(false);
    }
  }

  // lambda given the completed sticks, with the last stick's overshoot and the unused
  // durations integrated out, then those refreshed given lambda
  if (!prior.fixed_lambda) {
    auto log_lambda = draw_log_gamma(rng_, prior.lambda_shape + n_sticks_ - 1,
                                     prior.lambda_rate + t);
    lambda_ = std::max(std::exp(log_lambda), 1e-300);
  }
  auto used = 0.0;
  for (auto i = 0; i < n_sticks_ - 1; ++i) {
    used += durations_[i];
  }
  durations_[n_sticks_ - 1] = (t - used) + draw_exponential(rng_, lambda_);
  for (auto i = n_sticks_; i < cap_; ++i) {
    durations_[i] = draw_exponential(rng_, lambda_);
  }
  refresh_weights();
}

auto Chain::update_dp_sticks() -> void {
  const auto& prior = model_.dp;
  auto above = 0;
  auto log_rest = 0.0;
  for (auto l = cap_ - 2; l >= 0; --l) {
    above += counts_[l + 1];
    betas_[l] = draw_beta(rng_, 1.0 + counts_[l], theta_ + above);
    log_rest += std::log1p(-betas_[l]);
  }
  if (!prior.fixed_theta) {
    theta_ = draw_gamma(rng_, prior.theta_shape + cap_ - 1, prior.theta_rate - log_rest);
    theta_ = std::max(theta_, 1e-300);
  }
  refresh_weights();
}

auto Chain::sweep(bool adapting) -> void {
  if (model_.kind == Model_kind::fixed_k) {
    for (auto j = 0; j < std::ssize(r_); ++j) {
      update_fixed_value(j, adapting);
    }
    for (auto i = 0; i < std::ssize(cp_); ++i) {
      update_changepoint(i, adapting);
    }
    update_joint_block(adapting);
  } else {
    update_labels();
    update_runs();
    update_mixture_values(adapting);
    if (model_.kind == Model_kind::pp) {
      update_pp_sticks(adapting);
    } else {
      update_dp_sticks();
    }
  }
  update_dispersion(adapting);
  update_seed(adapting);
}

auto Chain::scalar_names() const -> std::vector<std::string> {
  auto names = std::vector<std::string>{};
  if (model_.kind == Model_kind::fixed_k) {
    for (auto j = 1; j <= model_.fixed_k.k_phases; ++j) {
      names.push_back(fmt::format("r_{}", j));
    }
    for (auto i = 1; i < model_.fixed_k.k_phases; ++i) {
      names.push_back(fmt::format("cp_{}", i));
    }
  } else if (model_.kind == Model_kind::pp) {
    names.push_back("lambda");
    names.push_back("n_sticks");
    names.push_back("n_occupied");
  } else {
    names.push_back("theta");
    names.push_back("n_occupied");
  }
  if (sample_dispersion_) {
    names.push_back("k");
  }
  if (sample_seed_) {
    names.push_back("seed");
  }
  names.push_back("loglik");
  if (model_.kind != Model_kind::fixed_k) {
    for (auto i = 1; i <= 10; ++i) {
      names.push_back(fmt::format("rt_day_{}", std::max(1, i * horizon() / 10)));
    }
  }
  return names;
}

auto Chain::record(Chain_result& out, int iteration) -> void {
  auto t = horizon();
  if (prior_only_) {
    like_.reset(rt_, k_, seed_);
  }
  auto labels = std::vector<int>(static_cast<std::size_t>(t));
  if (model_.kind == Model_kind::fixed_k) {
    for (auto day = 1; day <= t; ++day) {
      labels[day - 1] = phase_of_day(cp_, day);
    }
  } else {
    labels = z_;
  }
  auto label_cap = model_.kind == Model_kind::fixed_k ? static_cast<int>(r_.size()) : cap_;
  auto occupied = distinct_labels(labels, label_cap);

  auto scalars = std::vector<double>{};
  if (model_.kind == Model_kind::fixed_k) {
    scalars.insert(scalars.end(), r_.begin(), r_.end());
    scalars.insert(scalars.end(), cp_.begin(), cp_.end());
  } else if (model_.kind == Model_kind::pp) {
    scalars.push_back(lambda_);
    scalars.push_back(n_sticks_);
    scalars.push_back(occupied);
  } else {
    scalars.push_back(theta_);
    scalars.push_back(occupied);
  }
  if (sample_dispersion_) {
    scalars.push_back(k_);
  }
  if (sample_seed_) {
    scalars.push_back(seed_);
  }
  scalars.push_back(like_.total());
  if (model_.kind != Model_kind::fixed_k) {
    for (auto i = 1; i <= 10; ++i) {
      scalars.push_back(rt_[std::max(1, i * t / 10) - 1]);
    }
  }

  out.iteration.push_back(iteration);
  out.scalars.push_back(std::move(scalars));
  if (model_.kind == Model_kind::fixed_k) {
    out.phase_values.push_back(r_);
    out.weights.emplace_back();
  } else {
    auto used = model_.kind == Model_kind::pp ? n_sticks_ : cap_;
    out.phase_values.emplace_back(r_.begin(), r_.begin() + used);
    auto w = std::vector<double>(static_cast<std::size_t>(used));
    for (auto j = 0; j < used; ++j) {
      w[j] = std::exp(log_w_[j]);
    }
    out.weights.push_back(std::move(w));
  }
  out.contiguous.push_back(labels_contiguous(labels, label_cap) ? 1 : 0);
  out.labels.push_back(std::move(labels));
  out.rt.push_back(rt_);
  auto re = std::vector<double>(static_cast<std::size_t>(t));
  for (auto day = 0; day < t; ++day) {
    re[day] = rt_[day] * like_.susceptible(day) / data_.population_n;
  }
  out.re.push_back(std::move(re));
  auto inf = like_.infections();
  out.infections.emplace_back(inf.begin(), inf.end());
  auto fit = like_.fitted();
  out.fitted.emplace_back(fit.begin(), fit.end());
  auto cum = like_.cumulative_infections();
  out.cumulative.emplace_back(cum.begin(), cum.end());
  auto pw = like_.pointwise();
  out.pointwise.emplace_back(pw.begin(), pw.end());
  out.loglik.push_back(like_.total());
  out.occupied.push_back(occupied);
}

auto Chain::snapshot() const -> std::string {
  auto text = fmt::format("chain {} model {} regime {}\n", index_, model_.id(),
                          regime_name(data_.regime));
  text += fmt::format("loglik {}\nk {}\nseed {}\n", like_.total(), k_, seed_);
  text += fmt::format("phase values {}\n", r_);
  if (model_.kind == Model_kind::fixed_k) {
    text += fmt::format("changepoints {}\n", cp_);
  } else {
    text += fmt::format("labels {}\n", z_);
    text += fmt::format("{} {}\n", model_.kind == Model_kind::pp ? "lambda" : "theta",
                        model_.kind == Model_kind::pp ? lambda_ : theta_);
  }
  text += fmt::format("acceptance after warmup {}/{}\n", mh_accepted_, mh_proposals_);
  return text;
}

auto Chain::run() -> Chain_result {
  auto n_iter = config_.n_iterations;
  auto n_warm = static_cast<int>(std::floor(n_iter * config_.warmup_fraction));
  auto post = n_iter - n_warm;
  auto thin = std::max(1, (post + config_.max_draws_per_chain - 1) / config_.max_draws_per_chain);
  auto result = Chain_result{};
  for (auto it = 0; it < n_iter; ++it) {
    adapting_ = it < n_warm;
    sweep(adapting_);
    if (!adapting_ && (it - n_warm + 1) % thin == 0) {
      record(result, it + 1);
    }
  }
  result.acceptance =
      mh_proposals_ == 0 ? 1.0 : static_cast<double>(mh_accepted_) / mh_proposals_;
  result.snapshot = snapshot();
  return result;
}

}  // namespace

auto Model_spec::parse(std::string_view flag) -> Model_spec {
  auto spec = Model_spec{};
  if (flag == "pp") {
    spec.kind = Model_kind::pp;
    return spec;
  }
  if (flag == "dp") {
    spec.kind = Model_kind::dp;
    return spec;
  }
  constexpr auto prefix = std::string_view{"fixedk:"};
  if (flag.starts_with(prefix)) {
    auto digits = flag.substr(prefix.size());
    auto k = 0;
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc{} && end == digits.data() + digits.size() && k >= 1) {
      spec.kind = Model_kind::fixed_k;
      spec.fixed_k.k_phases = k;
      return spec;
    }
  }
  throw Domain_error{fmt::format("model flag '{}' is not one of fixedk:K (K >= 1), pp, dp", flag)};
}

auto Model_spec::id() const -> std::string {
  switch (kind) {
    case Model_kind::fixed_k:
      return fmt::format("fixedk:{}", fixed_k.k_phases);
    case Model_kind::pp:
      return "pp";
    case Model_kind::dp:
      return "dp";
  }
  return "unknown";
}

auto Fit_config::validate() const -> void {
  if (n_chains < 2) {
    throw Domain_error{"at least two chains are needed for convergence diagnostics"};
  }
  if (n_iterations < 2) {
    throw Domain_error{"need at least two iterations"};
  }
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0)) {
    throw Domain_error{fmt::format("warmup fraction {} outside (0, 1)", warmup_fraction)};
  }
  if (n_iterations - static_cast<int>(std::floor(n_iterations * warmup_fraction)) < 1) {
    throw Domain_error{"no iterations left after warmup"};
  }
  if (max_draws_per_chain < 1) {
    throw Domain_error{"max_draws_per_chain must be positive"};
  }
  if (!(dispersion_prior_mean > 0.0) || !(seed_prior_mean > 0.0)) {
    throw Domain_error{"prior means must be positive"};
  }
  if (fixed_dispersion && !(*fixed_dispersion > 0.0)) {
    throw Domain_error{"fixed dispersion must be positive"};
  }
  if (jobs < 1) {
    throw Domain_error{"jobs must be at least 1"};
  }
  switch (model.kind) {
    case Model_kind::fixed_k:
      if (model.fixed_k.k_phases < 1) {
        throw Domain_error{"fixed-K model needs at least one phase"};
      }
      break;
    case Model_kind::pp:
      if (model.pp.k_max < 1 || !(model.pp.lambda_shape > 0.0) || !(model.pp.lambda_rate > 0.0)) {
        throw Domain_error{"invalid Poisson-process prior"};
      }
      break;
    case Model_kind::dp:
      if (model.dp.truncation < 2 || !(model.dp.theta_shape > 0.0) ||
          !(model.dp.theta_rate > 0.0)) {
        throw Domain_error{"invalid Dirichlet-process prior"};
      }
      break;
  }
}

auto crude_rt(const Observation_data& data, int half_window) -> std::vector<double> {
  auto t = data.horizon();
  auto force = std::vector<double>(static_cast<std::size_t>(t), 0.0);
  auto gi = data.gi.masses();
  for (auto i = 1; i < t; ++i) {
    for (auto lag = 1; lag <= std::min<int>(i, gi.size()); ++lag) {
      force[i] += data.counts[i - lag] * gi[lag - 1];
    }
  }
  auto shift = data.regime == Regime::deaths
                   ? static_cast<int>(std::lround(data.pi.discrete_mean()))
                   : 0;
  auto estimate = std::vector<double>(static_cast<std::size_t>(t),
                                      std::numeric_limits<double>::quiet_NaN());
  for (auto u = 0; u < t; ++u) {
    // R_t at index u drives the count at index u + 1
    auto centre = std::clamp(u + 1 + shift, 1, t - 1);
    auto num = 0.0;
    auto den = 0.0;
    for (auto i = std::max(1, centre - half_window); i <= std::min(t - 1, centre + half_window);
         ++i) {
      num += data.counts[i];
      den += force[i];
    }
    if (den >= 1.0) {
      estimate[u] = std::clamp(num / den, 0.2, 5.0);
    }
  }
  auto last = std::numeric_limits<double>::quiet_NaN();
  for (auto& v : estimate) {
    if (std::isnan(v)) {
      v = last;
    } else {
      last = v;
    }
  }
  last = std::numeric_limits<double>::quiet_NaN();
  for (auto it = estimate.rbegin(); it != estimate.rend(); ++it) {
    if (std::isnan(*it)) {
      *it = std::isnan(last) ? 1.0 : last;
    } else {
      last = *it;
    }
  }
  return estimate;
}

auto gibbs_update_labels(std::vector<int>& labels, std::span<const double> phase_values,
                         std::span<const double> log_weights, Trajectory_likelihood& likelihood,
                         Random_stream& rng) -> void {
  auto n_labels = static_cast<int>(std::min(phase_values.size(), log_weights.size()));
  auto log_p = std::vector<double>(static_cast<std::size_t>(n_labels));
  for (auto t = 0; t < std::ssize(labels); ++t) {
    auto current_value = likelihood.rt()[t];
    auto current_total = likelihood.total();
    auto best = k_neg_inf;
    for (auto j = 0; j < n_labels; ++j) {
      if (!(log_weights[j] > k_neg_inf)) {
        log_p[j] = k_neg_inf;
        continue;
      }
      auto ll = phase_values[j] == current_value ? current_total
                                                 : likelihood.propose_day(t, phase_values[j]);
      log_p[j] = log_weights[j] + ll;
      best = std::max(best, log_p[j]);
    }
    if (!(best > k_neg_inf)) {
      continue;
    }
    auto chosen = draw_categorical_log(rng, log_p.data(), n_labels);
    if (phase_values[chosen] != current_value) {
      likelihood.propose_day(t, phase_values[chosen]);
      likelihood.accept();
    }
    labels[t] = chosen;
  }
}

auto run_mcmc(const Observation_data& data, const Fit_config& config) -> Posterior_draws {
  config.validate();
  data.validate();
  auto signal = 0.0;
  for (auto day = data.scored_from(); day <= data.horizon(); ++day) {
    signal += data.counts[day - 1];
  }
  if (!(signal > 0.0)) {
    throw Fit_error{"every scored observation is zero; the series carries no information about "
                    "R_t"};
  }

  auto chains = std::vector<Chain_result>(static_cast<std::size_t>(config.n_chains));
  auto errors = std::vector<std::exception_ptr>(chains.size());
  auto names = std::vector<std::string>{};
  {
    // names depend only on the configuration
    auto probe = Chain{data, config, 0};
    names = probe.scalar_names();
  }
  auto next = std::atomic<int>{0};
  auto work = [&] {
    for (auto c = next++; c < config.n_chains; c = next++) {
      try {
        auto chain = Chain{data, config, c};
        chains[c] = chain.run();
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  {
    auto workers = std::vector<std::jthread>{};
    auto n_workers = std::min(config.jobs, config.n_chains);
    for (auto w = 1; w < n_workers; ++w) {
      workers.emplace_back(work);
    }
    work();
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }

  if (std::all_of(chains.begin(), chains.end(),
                  [](const Chain_result& c) { return c.acceptance < 0.01; })) {
    auto report = std::string{};
    for (const auto& c : chains) {
      report += c.snapshot;
    }
    throw Sampler_failure{"every chain accepted fewer than 1% of its proposals after warmup",
                          report};
  }

  auto draws = Posterior_draws{};
  draws.model_id = config.model.id();
  draws.regime = data.regime;
  draws.horizon = data.horizon();
  draws.first_scored_day = data.scored_from();
  draws.population_n = data.population_n;
  draws.n_chains = config.n_chains;
  draws.scalar_names = names;
  auto append = [](auto& to, auto& from) {
    to.insert(to.end(), std::make_move_iterator(from.begin()), std::make_move_iterator(from.end()));
  };
  for (auto c = 0; c < config.n_chains; ++c) {
    auto& r = chains[c];
    draws.chain.insert(draws.chain.end(), r.iteration.size(), c);
    append(draws.iteration, r.iteration);
    append(draws.scalars, r.scalars);
    append(draws.phase_values, r.phase_values);
    append(draws.weights, r.weights);
    append(draws.labels, r.labels);
    append(draws.rt, r.rt);
    append(draws.re, r.re);
    append(draws.infections, r.infections);
    append(draws.fitted, r.fitted);
    append(draws.cumulative_infections, r.cumulative);
    append(draws.pointwise, r.pointwise);
    append(draws.loglik, r.loglik);
    append(draws.occupied, r.occupied);
    append(draws.contiguous, r.contiguous);
    draws.acceptance.push_back(r.acceptance);
  }
  if (!config.prior_only) {
    draws.validate();
  }
  return draws;
}

}  // namespace rtphase
