#pragma once

#include <cstdint>
#include <random>

namespace rtphase {

using Random_stream = std::mt19937_64;

// Independent stream for (seed, stream_id); stream ids separate chains and replicates.
auto make_stream(std::uint64_t seed, std::uint64_t stream_id = 0) -> Random_stream;

auto draw_uniform(Random_stream& rng) -> double;  // (0, 1)
auto draw_normal(Random_stream& rng) -> double;
auto draw_exponential(Random_stream& rng, double rate) -> double;
auto draw_gamma(Random_stream& rng, double shape, double rate) -> double;

// log of a Gamma(shape, rate) draw, accurate when shape << 1 and the draw underflows.
auto draw_log_gamma(Random_stream& rng, double shape, double rate) -> double;

auto draw_beta(Random_stream& rng, double a, double b) -> double;

// Negative binomial with mean `mu` and dispersion `k` (variance mu + mu^2/k), drawn as a
// gamma-Poisson mixture. k = +inf gives Poisson(mu).
auto draw_negbin(Random_stream& rng, double mu, double k) -> std::int64_t;

// Index drawn proportionally to exp(log_weights); -inf entries are never chosen.
auto draw_categorical_log(Random_stream& rng, const double* log_weights, int n) -> int;

}  // namespace rtphase
