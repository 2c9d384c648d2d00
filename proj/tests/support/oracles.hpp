#pragma once

// Independent reference implementations used as test oracles. Everything
// here deliberately avoids the library's own evaluation paths: contraction
// is literal nested summation over rank tuples, enumeration is an odometer
// over the index space.

#include <cstdint>
#include <functional>
#include <vector>

#include "tensor_train.hpp"

namespace oracle {

// Chained-product element value computed by summing over every rank tuple
// explicitly (exponential in d; fine for the small shapes used in tests).
inline double contract_bruteforce(const protes::TensorTrain& tt,
                                  const protes::MultiIndex& x) {
  const auto& cores = tt.cores();
  const std::int64_t d = tt.ndim();
  std::vector<std::int64_t> r(static_cast<std::size_t>(d) + 1, 0);
  double total = 0.0;

  // Odometer over (r_1, ..., r_{d-1}); r_0 = r_d = 0.
  std::vector<std::int64_t> mid(static_cast<std::size_t>(d > 0 ? d - 1 : 0), 0);
  while (true) {
    for (std::int64_t i = 1; i < d; ++i) r[static_cast<std::size_t>(i)] = mid[static_cast<std::size_t>(i - 1)];
    double prod = 1.0;
    for (std::int64_t i = 0; i < d; ++i)
      prod *= cores[static_cast<std::size_t>(i)].at(
          r[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i)],
          r[static_cast<std::size_t>(i) + 1]);
    total += prod;

    std::int64_t pos = 0;
    const std::int64_t nmid = d - 1;
    while (pos < nmid) {
      mid[static_cast<std::size_t>(pos)] += 1;
      if (mid[static_cast<std::size_t>(pos)] <
          tt.ranks()[static_cast<std::size_t>(pos) + 1])
        break;
      mid[static_cast<std::size_t>(pos)] = 0;
      ++pos;
    }
    if (pos >= nmid) break;
  }
  return total;
}

// Calls fn for every multi-index of the given shape, in odometer order
// (last mode fastest).
inline void for_each_index(const std::vector<std::int64_t>& shape,
                           const std::function<void(const protes::MultiIndex&)>& fn) {
  if (shape.empty()) return;
  protes::MultiIndex x(shape.size(), 0);
  while (true) {
    fn(x);
    std::int64_t pos = static_cast<std::int64_t>(shape.size()) - 1;
    while (pos >= 0) {
      if (++x[static_cast<std::size_t>(pos)] < shape[static_cast<std::size_t>(pos)])
        break;
      x[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) return;
  }
}

inline std::int64_t flat_index(const protes::MultiIndex& x,
                               const std::vector<std::int64_t>& shape) {
  std::int64_t f = 0;
  for (std::size_t i = 0; i < shape.size(); ++i) f = f * shape[i] + x[i];
  return f;
}

inline std::int64_t index_space_size(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (std::int64_t s : shape) n *= s;
  return n;
}

}  // namespace oracle
