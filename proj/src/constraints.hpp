#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "tensor_train.hpp"

namespace protes {

// A deterministic finite-state automaton over mode symbols, used to build
// 0/1 indicator tensors constructively. `transition` returns the successor
// state or nullopt for rejection; rejection is absorbing (once rejected the
// tensor value is 0 regardless of the remaining symbols). `accept` is
// evaluated on the state reached after the final symbol.
struct AutomatonSpec {
  std::int64_t num_states = 0;   // states are 0..num_states-1, start state 0
  std::int64_t num_modes = 0;    // d
  std::int64_t num_symbols = 0;  // N per mode
  std::function<std::optional<std::int64_t>(std::int64_t pos, std::int64_t symbol,
                                            std::int64_t state)>
      transition;
  std::function<bool(std::int64_t state)> accept;
};

// Tensor train whose element at x is exactly 1 when the automaton accepts
// the symbol string x and exactly 0 otherwise. One rank channel per state
// plus an absorbing reject channel, so interior ranks are num_states + 1
// and boundary ranks are 1.
TensorTrain build_indicator_tt(const AutomatonSpec& spec);

// Runs the automaton directly on a string; the reference semantics of the
// indicator tensor.
bool automaton_accepts(const AutomatonSpec& spec, const MultiIndex& x);

// Automaton for the minimum-run-length control constraint: a binary string
// is admissible when every maximal run of ones has length >= min_run. The
// state counts consecutive ones seen so far, capped at min_run; a run that
// ends short of min_run rejects. States 0..min_run, so the indicator ranks
// never exceed min_run + 2.
AutomatonSpec min_run_spec(std::int64_t d, std::int64_t min_run);

// Direct admissibility check for the min-run constraint (used for post-hoc
// verification of reported controls).
bool min_run_admissible(const MultiIndex& x, std::int64_t min_run);

// The indicator prepared as an initial distribution: interior ranks padded
// up to target_rank with uniform noise of magnitude `noise` (default 1e-6)
// in the new channels only. The padded channels change tensor values by at
// most O(noise^2 * d * rank), far below the indicator's 0/1 scale, but give
// the gradient updates capacity to shape the distribution. target_rank <=
// the current rank returns the tensor unchanged.
TensorTrain constrained_init(const TensorTrain& indicator,
                             std::int64_t target_rank, std::uint64_t seed,
                             double noise = 1e-6);

}  // namespace protes
