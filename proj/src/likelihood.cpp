#include "rtphase/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "rtphase/errors.hpp"

namespace rtphase {

namespace {

auto convolve_at(std::span<const double> series, std::span<const double> kernel, int index)
    -> double {
  auto sum = 0.0;
  auto max_lag = std::min<int>(index, static_cast<int>(kernel.size()));
  for (auto lag = 1; lag <= max_lag; ++lag) {
    sum += series[index - lag] * kernel[lag - 1];
  }
  return sum;
}

}  // namespace

auto regime_name(Regime regime) -> std::string_view {
  return regime == Regime::infections ? "infections" : "deaths";
}

auto parse_regime(std::string_view name) -> Regime {
  if (name == "infections" || name == "cases") {
    return Regime::infections;
  }
  if (name == "deaths") {
    return Regime::deaths;
  }
  throw Domain_error{fmt::format("unknown observation regime '{}'", name)};
}

auto Observation_data::scored_from() const -> int {
  if (regime == Regime::infections) {
    return std::max({first_scored_day, seed_days + 1, 2});
  }
  return std::max(first_scored_day, 2);
}

auto Observation_data::validate() const -> void {
  if (horizon() < 2) {
    throw Domain_error{"observation series needs at least two days"};
  }
  if (!(population_n > 0.0)) {
    throw Domain_error{"population must be positive"};
  }
  for (auto c : counts) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw Domain_error{"observed counts must be finite and non-negative"};
    }
  }
  if (gi.max_lag() == 0) {
    throw Domain_error{"generation interval is required"};
  }
  if (seed_days < 0 || seed_days >= horizon()) {
    throw Domain_error{fmt::format("seeding window of {} days does not fit horizon {}",
                                   seed_days, horizon())};
  }
  if (scored_from() > horizon()) {
    throw Domain_error{"no observations left to score after the start day"};
  }
  if (regime == Regime::deaths) {
    if (pi.max_lag() == 0) {
      throw Domain_error{"infection-to-death interval is required"};
    }
    if (std::ssize(ifr) != horizon()) {
      throw Shape_error{fmt::format("IFR path has {} days, series has {}", ifr.size(),
                                    horizon())};
    }
    for (auto v : ifr) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Domain_error{fmt::format("IFR {} outside [0, 1]", v)};
      }
    }
  }
}

auto log_likelihood_infections(const Observation_data& data, std::span<const double> rt_daily,
                               double dispersion_k) -> Likelihood_terms {
  if (std::ssize(rt_daily) != data.horizon()) {
    throw Shape_error{"R_t series and observations differ in length"};
  }
  auto n = data.population_n;
  auto result = Likelihood_terms{};
  auto cumulative = 0.0;
  auto cumulative_before = std::vector<double>(data.counts.size());
  for (auto i = std::size_t{0}; i != data.counts.size(); ++i) {
    cumulative_before[i] = cumulative;
    cumulative += data.counts[i];
  }
  for (auto day = data.scored_from(); day <= data.horizon(); ++day) {
    auto t = day - 1;
    auto susceptible_prev = std::max(0.0, n - cumulative_before[t]);
    auto force = convolve_at(data.counts, data.gi.masses(), t);
    auto mean = rt_daily[t - 1] * (susceptible_prev / n) * force;
    auto term = negbin_log_pmf_unchecked(data.counts[t], mean, dispersion_k);
    result.pointwise.push_back(term);
    result.total += term;
  }
  return result;
}

auto latent_infections(const Observation_data& data, std::span<const double> rt_daily,
                       double seed) -> std::vector<double> {
  if (std::ssize(rt_daily) != data.horizon()) {
    throw Shape_error{"R_t series and observations differ in length"};
  }
  auto n = data.population_n;
  auto c = std::vector<double>(data.counts.size(), 0.0);
  auto cumulative = 0.0;
  for (auto t = 0; t < data.horizon(); ++t) {
    auto remaining = std::max(0.0, n - cumulative);
    if (t < data.seed_days) {
      c[t] = std::min(seed, remaining);
    } else if (t > 0) {
      auto force = convolve_at(c, data.gi.masses(), t);
      c[t] = std::clamp((remaining / n) * rt_daily[t - 1] * force, 0.0, remaining);
    }
    cumulative += c[t];
  }
  return c;
}

auto log_likelihood_deaths_given_infections(const Observation_data& data,
                                            std::span<const double> infections,
                                            double dispersion_k) -> Likelihood_terms {
  if (std::ssize(infections) != data.horizon()) {
    throw Shape_error{"infection trajectory and observations differ in length"};
  }
  auto result = Likelihood_terms{};
  for (auto day = data.scored_from(); day <= data.horizon(); ++day) {
    auto t = day - 1;
    auto mean = data.ifr[t] * convolve_at(infections, data.pi.masses(), t);
    auto term = negbin_log_pmf_unchecked(data.counts[t], mean, dispersion_k);
    result.pointwise.push_back(term);
    result.total += term;
  }
  return result;
}

auto log_likelihood_deaths(const Observation_data& data, std::span<const double> rt_daily,
                           double dispersion_k, double seed) -> Likelihood_terms {
  auto c = latent_infections(data, rt_daily, seed);
  return log_likelihood_deaths_given_infections(data, c, dispersion_k);
}

// ---------------------------------------------------------------------------------------------

Trajectory_likelihood::Trajectory_likelihood(const Observation_data& data) : data_{&data} {
  data.validate();
  first_scored_index_ = data.scored_from() - 1;
  auto n_days = static_cast<std::size_t>(data.horizon());
  for (auto* buf : {&cur_, &cand_}) {
    buf->rt.assign(n_days, 0.0);
    buf->infections.assign(n_days, 0.0);
    buf->cumulative.assign(n_days, 0.0);
    buf->fitted.assign(n_days, 0.0);
    buf->pointwise.assign(n_days, 0.0);
    buf->normaliser.assign(n_days, 0.0);
  }
  if (data.regime == Regime::infections) {
    observed_force_.assign(n_days, 0.0);
    observed_cumulative_.assign(n_days, 0.0);
    auto cumulative = 0.0;
    for (auto t = 0; t < data.horizon(); ++t) {
      if (t > 0) {
        auto remaining = std::max(0.0, data.population_n - cumulative);
        observed_force_[t] = (remaining / data.population_n) *
                             convolve_at(data.counts, data.gi.masses(), t);
      }
      cumulative += data.counts[t];
      observed_cumulative_[t] = cumulative;
    }
  }
}

auto Trajectory_likelihood::pointwise() const -> std::span<const double> {
  return std::span<const double>{cur_.pointwise}.subspan(first_scored_index_);
}

auto Trajectory_likelihood::susceptible(int index) const -> double {
  return std::max(0.0, data_->population_n - cur_.cumulative[index]);
}

auto Trajectory_likelihood::score_day(const Buffers& buf, int index) const -> double {
  return negbin_log_kernel(data_->counts[index], buf.fitted[index], buf.k,
                           buf.normaliser[index]);
}

auto Trajectory_likelihood::sum_pointwise(const Buffers& buf) const -> double {
  auto total = 0.0;
  for (auto t = first_scored_index_; t < data_->horizon(); ++t) {
    total += buf.pointwise[t];
  }
  return total;
}

auto Trajectory_likelihood::recompute(Buffers& buf, int first_changed_rt, bool normalisers) const
    -> void {
  const auto& data = *data_;
  auto n_days = data.horizon();
  auto n = data.population_n;
  if (normalisers) {
    for (auto t = first_scored_index_; t < n_days; ++t) {
      buf.normaliser[t] = negbin_log_normaliser(data.counts[t], buf.k);
    }
  }

  auto score_from = first_scored_index_;
  if (data.regime == Regime::infections) {
    // R_t at index u drives day index u + 1
    auto from = std::max(first_changed_rt + 1, 0);
    for (auto t = from; t < n_days; ++t) {
      auto mean = t == 0 ? 0.0 : buf.rt[t - 1] * observed_force_[t];
      if (t < data.seed_days) {
        mean = data.counts[t];
      }
      buf.fitted[t] = mean;
      buf.infections[t] = mean;
      buf.cumulative[t] = observed_cumulative_[t];
    }
    score_from = std::max(score_from, normalisers ? first_scored_index_ : from);
  } else {
    auto from = std::max(first_changed_rt + 1, 0);
    auto gi = data.gi.masses();
    auto cumulative = from == 0 ? 0.0 : buf.cumulative[from - 1];
    for (auto t = from; t < n_days; ++t) {
      auto remaining = std::max(0.0, n - cumulative);
      auto c = 0.0;
      if (t < data.seed_days) {
        c = std::min(buf.seed, remaining);
      } else if (t > 0) {
        auto force = convolve_at(buf.infections, gi, t);
        c = std::clamp((remaining / n) * buf.rt[t - 1] * force, 0.0, remaining);
      }
      buf.infections[t] = c;
      cumulative += c;
      buf.cumulative[t] = cumulative;
    }
    auto death_from = std::max(from + 1, 1);
    auto pi = data.pi.masses();
    buf.fitted[0] = 0.0;
    for (auto t = death_from; t < n_days; ++t) {
      buf.fitted[t] = data.ifr[t] * convolve_at(buf.infections, pi, t);
    }
    score_from = std::max(score_from, normalisers ? first_scored_index_ : death_from);
  }
  for (auto t = score_from; t < n_days; ++t) {
    buf.pointwise[t] = score_day(buf, t);
  }
  buf.total = sum_pointwise(buf);
}

auto Trajectory_likelihood::reset(std::span<const double> rt_daily, double dispersion_k,
                                  double seed) -> double {
  if (std::ssize(rt_daily) != data_->horizon()) {
    throw Shape_error{"R_t series and observations differ in length"};
  }
  std::copy(rt_daily.begin(), rt_daily.end(), cur_.rt.begin());
  cur_.k = dispersion_k;
  cur_.seed = seed;
  recompute(cur_, -1, true);
  pending_ = Pending::none;
  return cur_.total;
}

auto Trajectory_likelihood::copy_into_candidate() -> void {
  cand_.rt = cur_.rt;
  cand_.infections = cur_.infections;
  cand_.cumulative = cur_.cumulative;
  cand_.fitted = cur_.fitted;
  cand_.pointwise = cur_.pointwise;
  cand_.normaliser = cur_.normaliser;
  cand_.k = cur_.k;
  cand_.seed = cur_.seed;
  cand_.total = cur_.total;
}

auto Trajectory_likelihood::propose_rt(std::span<const double> rt_daily, int first_changed)
    -> double {
  copy_into_candidate();
  std::copy(rt_daily.begin(), rt_daily.end(), cand_.rt.begin());
  recompute(cand_, std::max(first_changed, 0), false);
  pending_ = Pending::full;
  return cand_.total;
}

auto Trajectory_likelihood::propose_day(int index, double rt_value) -> double {
  if (data_->regime == Regime::infections) {
    auto t = index + 1;
    pending_ = Pending::single_day;
    pending_index_ = index;
    pending_rt_ = rt_value;
    if (t >= data_->horizon() || t < data_->seed_days) {
      pending_term_ = 0.0;
      pending_total_ = cur_.total;
      return pending_total_;
    }
    auto mean = rt_value * observed_force_[t];
    pending_term_ = t >= first_scored_index_
                        ? negbin_log_kernel(data_->counts[t], mean, cur_.k, cur_.normaliser[t])
                        : 0.0;
    pending_total_ = cur_.total - cur_.pointwise[t] + pending_term_;
    return pending_total_;
  }
  copy_into_candidate();
  cand_.rt[index] = rt_value;
  recompute(cand_, index, false);
  pending_ = Pending::full;
  return cand_.total;
}

auto Trajectory_likelihood::propose_dispersion(double dispersion_k) -> double {
  copy_into_candidate();
  cand_.k = dispersion_k;
  recompute(cand_, data_->horizon(), true);
  pending_ = Pending::full;
  return cand_.total;
}

auto Trajectory_likelihood::propose_seed(double seed) -> double {
  copy_into_candidate();
  cand_.seed = seed;
  if (data_->regime == Regime::deaths) {
    recompute(cand_, -1, false);
  }
  pending_ = Pending::full;
  return cand_.total;
}

auto Trajectory_likelihood::propose_rt_and_seed(std::span<const double> rt_daily,
                                                int first_changed, double seed) -> double {
  copy_into_candidate();
  std::copy(rt_daily.begin(), rt_daily.end(), cand_.rt.begin());
  cand_.seed = seed;
  recompute(cand_, data_->regime == Regime::deaths ? -1 : std::max(first_changed, 0), false);
  pending_ = Pending::full;
  return cand_.total;
}

auto Trajectory_likelihood::accept() -> void {
  if (pending_ == Pending::full) {
    std::swap(cur_, cand_);
  } else if (pending_ == Pending::single_day) {
    auto t = pending_index_ + 1;
    cur_.rt[pending_index_] = pending_rt_;
    if (t < data_->horizon() && t >= data_->seed_days) {
      auto mean = pending_rt_ * observed_force_[t];
      cur_.fitted[t] = mean;
      cur_.infections[t] = mean;
      cur_.pointwise[t] = pending_term_;
    }
    // recompute the sum now and then to keep rounding drift out of the total
    cur_.total = pending_total_;
    if (++single_day_accepts_ % 4096 == 0) {
      cur_.total = sum_pointwise(cur_);
    }
  }
  pending_ = Pending::none;
}

}  // namespace rtphase
