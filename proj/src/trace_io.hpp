#pragma once

#include <string>

#include "learner.hpp"

namespace protes {

// One JSON object per iteration, newline terminated:
//   {"iter": n, "evals": n, "best_y": v, "best_x": [..], "t_s": v}
// With include_timing false the t_s field is written as 0, which makes the
// output reproducible byte for byte across runs.
std::string trace_to_jsonl(const RunTrace& trace, bool include_timing = true,
                           double value_scale = 1.0);

}  // namespace protes
