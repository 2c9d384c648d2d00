#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tensor_train.hpp"

namespace protes {

// A batch of multi-indices drawn from a tensor train, together with the
// seed that produced it. Deterministic in (tensor, count, seed).
struct SampleBatch {
  std::vector<MultiIndex> indices;
  std::uint64_t rng_seed = 0;
};

// Inverse-CDF draw from nonnegative weights: the smallest n whose
// cumulative normalized weight strictly exceeds u. Weights need not be
// normalized. Throws on NaN, negative or all-zero weights.
std::int64_t categorical_draw(std::span<const double> weights, double u);

// Draws `count` multi-indices with probability proportional to the
// tensor's absolute values, one mode at a time from the exact univariate
// conditionals induced by the TT chain. Sampling is with replacement.
// Sample j consumes only its own RNG substream (seed, j), so the batch is
// identical whether drawn serially or in parallel.
SampleBatch tt_sample(const TensorTrain& tt, std::int64_t count,
                      std::uint64_t rng_seed);

}  // namespace protes
