#include "constraints.hpp"

#include <algorithm>
#include <stdexcept>

#include "rng.hpp"

namespace protes {

namespace {

constexpr std::uint64_t kSaltPadNoise = 0x50414444;

}  // namespace

TensorTrain build_indicator_tt(const AutomatonSpec& spec) {
  if (spec.num_states < 1 || spec.num_modes < 1 || spec.num_symbols < 1)
    throw std::invalid_argument("automaton sizes must be positive");
  if (!spec.transition || !spec.accept)
    throw std::invalid_argument("automaton functions must be set");

  const std::int64_t d = spec.num_modes;
  const std::int64_t n_sym = spec.num_symbols;
  const std::int64_t channels = spec.num_states + 1;  // + absorbing reject
  const std::int64_t reject = spec.num_states;

  // Channel reached from `state` on (pos, symbol).
  const auto step = [&](std::int64_t pos, std::int64_t symbol,
                        std::int64_t state) -> std::int64_t {
    if (state == reject) return reject;
    const auto next = spec.transition(pos, symbol, state);
    return next ? *next : reject;
  };

  std::vector<TtCore> cores;
  cores.reserve(static_cast<std::size_t>(d));
  for (std::int64_t pos = 0; pos < d; ++pos) {
    const bool first = pos == 0;
    const bool last = pos == d - 1;
    TtCore core(first ? 1 : channels, n_sym, last ? 1 : channels);
    for (std::int64_t s = 0; s < (first ? 1 : channels); ++s) {
      for (std::int64_t sym = 0; sym < n_sym; ++sym) {
        const std::int64_t next = step(pos, sym, s);
        if (last) {
          // Fold acceptance into the final core; the reject channel stays 0.
          if (next != reject && spec.accept(next)) core.at(s, sym, 0) = 1.0;
        } else {
          core.at(s, sym, next) = 1.0;
        }
      }
    }
    cores.push_back(std::move(core));
  }
  return TensorTrain(std::move(cores));
}

bool automaton_accepts(const AutomatonSpec& spec, const MultiIndex& x) {
  if (static_cast<std::int64_t>(x.size()) != spec.num_modes)
    throw std::invalid_argument("string length does not match automaton");
  std::int64_t state = 0;
  for (std::int64_t pos = 0; pos < spec.num_modes; ++pos) {
    const auto next =
        spec.transition(pos, x[static_cast<std::size_t>(pos)], state);
    if (!next) return false;
    state = *next;
  }
  return spec.accept(state);
}

AutomatonSpec min_run_spec(std::int64_t d, std::int64_t min_run) {
  if (d < 1 || min_run < 1)
    throw std::invalid_argument("d and min_run must be positive");
  AutomatonSpec spec;
  spec.num_states = min_run + 1;  // count of consecutive ones, capped
  spec.num_modes = d;
  spec.num_symbols = 2;
  const std::int64_t cap = min_run;
  spec.transition = [cap](std::int64_t, std::int64_t symbol,
                          std::int64_t state) -> std::optional<std::int64_t> {
    if (symbol == 1) return std::min(cap, state + 1);
    // A zero either follows a completed run (state 0 or cap) or cuts a run
    // short, which is never repairable.
    if (state == 0 || state == cap) return 0;
    return std::nullopt;
  };
  // The string ends as if followed by a virtual zero: a trailing run must
  // also be complete.
  spec.accept = [cap](std::int64_t state) { return state == 0 || state == cap; };
  return spec;
}

bool min_run_admissible(const MultiIndex& x, std::int64_t min_run) {
  std::int64_t run = 0;
  for (std::int64_t v : x) {
    if (v == 1) {
      ++run;
    } else {
      if (run > 0 && run < min_run) return false;
      run = 0;
    }
  }
  return run == 0 || run >= min_run;
}

TensorTrain constrained_init(const TensorTrain& indicator,
                             std::int64_t target_rank, std::uint64_t seed,
                             double noise) {
  const auto& old_cores = indicator.cores();
  const std::int64_t d = indicator.ndim();
  SplitMix64 rng(substream(seed, kSaltPadNoise));

  std::vector<TtCore> cores;
  cores.reserve(static_cast<std::size_t>(d));
  for (std::int64_t i = 0; i < d; ++i) {
    const TtCore& old = old_cores[static_cast<std::size_t>(i)];
    // Boundary ranks stay 1.
    const Eigen::Index l =
        (i == 0) ? 1 : std::max<Eigen::Index>(old.left_rank, target_rank);
    const Eigen::Index r =
        (i == d - 1) ? 1 : std::max<Eigen::Index>(old.right_rank, target_rank);
    TtCore core(l, old.mode_size, r);
    for (Eigen::Index a = 0; a < l; ++a)
      for (Eigen::Index n = 0; n < old.mode_size; ++n)
        for (Eigen::Index b = 0; b < r; ++b)
          core.at(a, n, b) = (a < old.left_rank && b < old.right_rank)
                                 ? old.at(a, n, b)
                                 : noise * rng.next_unit();
    cores.push_back(std::move(core));
  }
  return TensorTrain(std::move(cores));
}

}  // namespace protes
