#include "rtphase/adaptive_mh.hpp"

#include <algorithm>
#include <cmath>

#include "rtphase/errors.hpp"

namespace rtphase {

Adaptive_scale::Adaptive_scale(double initial_scale, double target_acceptance)
    : log_scale_{std::log(initial_scale)}, target_{target_acceptance} {
  if (!(initial_scale > 0.0) || !(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw Domain_error{"adaptive scale needs a positive scale and a target in (0, 1)"};
  }
}

auto Adaptive_scale::scale() const -> double { return std::exp(log_scale_); }

auto Adaptive_scale::record(bool accepted, bool adapting) -> void {
  ++proposals_;
  if (accepted) {
    ++accepted_;
  }
  if (adapting) {
    ++adapt_steps_;
    auto gain = std::min(1.0, 10.0 / std::pow(static_cast<double>(adapt_steps_), 0.6));
    log_scale_ += gain * ((accepted ? 1.0 : 0.0) - target_);
    log_scale_ = std::clamp(log_scale_, -20.0, 10.0);
  }
}

auto Adaptive_scale::acceptance_rate() const -> double {
  return proposals_ == 0 ? 0.0 : static_cast<double>(accepted_) / proposals_;
}

auto Adaptive_scale::reset_counts() -> void {
  proposals_ = 0;
  accepted_ = 0;
}

Adaptive_block::Adaptive_block(std::vector<double> initial_sd, double target_acceptance)
    : initial_sd_{std::move(initial_sd)},
      scale_{2.38 / std::sqrt(static_cast<double>(std::max<std::size_t>(initial_sd_.size(), 1))),
             target_acceptance},
      mean_(initial_sd_.size(), 0.0),
      comoment_(initial_sd_.size() * initial_sd_.size(), 0.0) {
  if (initial_sd_.empty() ||
      std::any_of(initial_sd_.begin(), initial_sd_.end(), [](double v) { return !(v > 0.0); })) {
    throw Domain_error{"block proposal needs positive initial standard deviations"};
  }
}

auto Adaptive_block::propose(std::span<const double> x, Random_stream& rng) const
    -> std::vector<double> {
  auto d = dimension();
  auto z = std::vector<double>(static_cast<std::size_t>(d));
  for (auto& v : z) {
    v = draw_normal(rng);
  }
  auto y = std::vector<double>(x.begin(), x.end());
  auto s = scale_.scale();
  for (auto i = 0; i < d; ++i) {
    if (learned_) {
      auto step = 0.0;
      for (auto j = 0; j <= i; ++j) {
        step += factor_[i * d + j] * z[j];
      }
      y[i] += s * step;
    } else {
      y[i] += s * initial_sd_[i] * z[i];
    }
  }
  return y;
}

auto Adaptive_block::record(std::span<const double> state, bool accepted, bool adapting)
    -> void {
  scale_.record(accepted, adapting);
  if (!adapting) {
    return;
  }
  auto d = dimension();
  ++n_seen_;
  auto delta = std::vector<double>(static_cast<std::size_t>(d));
  for (auto i = 0; i < d; ++i) {
    delta[i] = state[i] - mean_[i];
    mean_[i] += delta[i] / static_cast<double>(n_seen_);
  }
  for (auto i = 0; i < d; ++i) {
    for (auto j = 0; j < d; ++j) {
      comoment_[i * d + j] += delta[i] * (state[j] - mean_[j]);
    }
  }
  if (n_seen_ >= 200 && n_seen_ % 50 == 0) {
    refresh_factor();
  }
}

auto Adaptive_block::refresh_factor() -> void {
  auto d = dimension();
  auto cov = std::vector<double>(comoment_.size());
  for (auto i = 0; i < d; ++i) {
    for (auto j = 0; j < d; ++j) {
      cov[i * d + j] = comoment_[i * d + j] / static_cast<double>(n_seen_ - 1);
    }
    cov[i * d + i] += 1e-6 * initial_sd_[i] * initial_sd_[i];
  }
  auto l = std::vector<double>(cov.size(), 0.0);
  for (auto i = 0; i < d; ++i) {
    for (auto j = 0; j <= i; ++j) {
      auto sum = cov[i * d + j];
      for (auto k = 0; k < j; ++k) {
        sum -= l[i * d + k] * l[j * d + k];
      }
      if (i == j) {
        if (!(sum > 0.0)) {
          return;
        }
        l[i * d + i] = std::sqrt(sum);
      } else {
        l[i * d + j] = sum / l[j * d + j];
      }
    }
  }
  factor_ = std::move(l);
  learned_ = true;
}

auto metropolis_accept(Random_stream& rng, double log_ratio) -> bool {
  if (std::isnan(log_ratio)) {
    return false;
  }
  if (log_ratio >= 0.0) {
    return true;
  }
  return std::log(draw_uniform(rng)) < log_ratio;
}

auto adaptive_random_walk(const std::function<double(std::span<const double>)>& log_target,
                          std::vector<double> initial, int n_iterations, int n_warmup,
                          Random_stream& rng, double target_acceptance) -> Random_walk_run {
  if (n_warmup < 0 || n_warmup >= n_iterations) {
    throw Domain_error{"warmup must be shorter than the run"};
  }
  auto x = std::move(initial);
  auto current = log_target(x);
  if (!std::isfinite(current)) {
    throw Domain_error{"initial point has zero target density"};
  }
  auto scales = std::vector<Adaptive_scale>(x.size(), Adaptive_scale{1.0, target_acceptance});
  auto run = Random_walk_run{};
  run.draws.reserve(static_cast<std::size_t>(n_iterations - n_warmup));
  for (auto it = 0; it < n_iterations; ++it) {
    auto adapting = it < n_warmup;
    if (it == n_warmup) {
      for (auto& s : scales) {
        s.reset_counts();
      }
    }
    for (auto i = std::size_t{0}; i != x.size(); ++i) {
      auto old = x[i];
      x[i] = old + scales[i].scale() * draw_normal(rng);
      auto proposed = log_target(x);
      auto accepted = metropolis_accept(rng, proposed - current);
      if (accepted) {
        current = proposed;
      } else {
        x[i] = old;
      }
      scales[i].record(accepted, adapting);
    }
    if (!adapting) {
      run.draws.push_back(x);
    }
  }
  auto accepted = 0L;
  auto proposed = 0L;
  for (const auto& s : scales) {
    run.scales.push_back(s.scale());
    accepted += s.accepted();
    proposed += s.proposals();
  }
  run.acceptance_rate = proposed == 0 ? 0.0 : static_cast<double>(accepted) / proposed;
  return run;
}

}  // namespace rtphase
