#pragma once

// Synthetic problem with one known strictly smallest value: f(x*) = 0 and
// f(x) = 1 + noise(x) with noise in (0,1) elsewhere. The noise is a pure
// hash of the index, so the problem is deterministic and the planted
// optimum is unique by construction.

#include <cstdint>

#include "problems.hpp"
#include "rng.hpp"

namespace testsupport {

inline std::uint64_t hash_index(const protes::MultiIndex& x, std::uint64_t seed) {
  std::uint64_t h = protes::mix64(seed ^ 0x9E3779B97F4A7C15ULL);
  for (std::size_t i = 0; i < x.size(); ++i)
    h = protes::mix64(h + protes::kGolden64 * (static_cast<std::uint64_t>(x[i]) + i + 1));
  return h;
}

inline protes::MultiIndex planted_optimum(const std::vector<std::int64_t>& shape,
                                          std::uint64_t seed) {
  protes::SplitMix64 rng(protes::substream(seed, 0x504C414E));
  protes::MultiIndex star;
  star.reserve(shape.size());
  for (std::int64_t n : shape)
    star.push_back(static_cast<std::int64_t>(
        rng.next_below(static_cast<std::uint64_t>(n))));
  return star;
}

inline protes::Problem planted_problem(const std::vector<std::int64_t>& shape,
                                       std::uint64_t seed) {
  const protes::MultiIndex star = planted_optimum(shape, seed);
  auto fn = [star, seed](const protes::MultiIndex& x) {
    if (x == star) return 0.0;
    return 1.0 + (static_cast<double>(hash_index(x, seed) >> 11) + 0.5) * 0x1.0p-53;
  };
  return protes::Problem(
      "planted", shape, std::move(fn),
      nlohmann::json{{"kind", "planted"}, {"seed", seed}});
}

}  // namespace testsupport
