#include "trace_io.hpp"

#include <nlohmann/json.hpp>

namespace protes {

std::string trace_to_jsonl(const RunTrace& trace, bool include_timing,
                           double value_scale) {
  std::string out;
  for (const TraceRecord& rec : trace) {
    nlohmann::json line{{"iter", rec.iter},
                        {"evals", rec.evals_used},
                        {"best_y", value_scale * rec.best_value},
                        {"best_x", rec.best_index},
                        {"t_s", include_timing ? rec.wall_time_s : 0.0}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace protes
