#include "rtphase/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rtphase {

auto make_stream(std::uint64_t seed, std::uint64_t stream_id) -> Random_stream {
  auto seq = std::seed_seq{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
  return Random_stream{seq};
}

auto draw_uniform(Random_stream& rng) -> double {
  // 53 random bits, shifted off zero
  auto u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  return u;
}

auto draw_normal(Random_stream& rng) -> double {
  return std::normal_distribution<double>{0.0, 1.0}(rng);
}

auto draw_exponential(Random_stream& rng, double rate) -> double {
  return -std::log(draw_uniform(rng)) / rate;
}

auto draw_gamma(Random_stream& rng, double shape, double rate) -> double {
  return std::gamma_distribution<double>{shape, 1.0 / rate}(rng);
}

auto draw_log_gamma(Random_stream& rng, double shape, double rate) -> double {
  if (shape >= 1.0) {
    return std::log(draw_gamma(rng, shape, rate));
  }
  // Gamma(a) = Gamma(a + 1) * U^(1/a)
  auto g = std::gamma_distribution<double>{shape + 1.0, 1.0}(rng);
  return std::log(g) + std::log(draw_uniform(rng)) / shape - std::log(rate);
}

auto draw_beta(Random_stream& rng, double a, double b) -> double {
  auto la = draw_log_gamma(rng, a, 1.0);
  auto lb = draw_log_gamma(rng, b, 1.0);
  auto m = std::max(la, lb);
  auto v = std::exp(la - m) / (std::exp(la - m) + std::exp(lb - m));
  // keep strictly inside (0, 1)
  v = std::clamp(v, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
  return v;
}

auto draw_negbin(Random_stream& rng, double mu, double k) -> std::int64_t {
  if (!(mu > 0.0)) {
    return 0;
  }
  auto rate = mu;
  if (std::isfinite(k)) {
    rate = draw_gamma(rng, k, k / mu);
  }
  if (!(rate > 0.0)) {
    return 0;
  }
  return std::poisson_distribution<std::int64_t>{rate}(rng);
}

auto draw_categorical_log(Random_stream& rng, const double* log_weights, int n) -> int {
  auto max_lw = -std::numeric_limits<double>::infinity();
  for (auto i = 0; i != n; ++i) {
    max_lw = std::max(max_lw, log_weights[i]);
  }
  auto total = 0.0;
  for (auto i = 0; i != n; ++i) {
    total += std::exp(log_weights[i] - max_lw);
  }
  auto u = draw_uniform(rng) * total;
  auto last_valid = 0;
  for (auto i = 0; i != n; ++i) {
    auto w = std::exp(log_weights[i] - max_lw);
    if (w > 0.0) {
      last_valid = i;
      if (u < w) {
        return i;
      }
      u -= w;
    }
  }
  return last_valid;
}

}  // namespace rtphase
