#include "protes/protes.h"

#include <cstring>
#include <exception>
#include <new>
#include <stdexcept>
#include <string>

#include "constraints.hpp"
#include "learner.hpp"
#include "problems.hpp"
#include "sampler.hpp"
#include "tensor_train.hpp"
#include "trace_io.hpp"

using protes::MultiIndex;
using protes::TensorTrain;

struct protes_tt {
  TensorTrain value;
};

struct protes_problem {
  protes::Problem value;
};

struct protes_result {
  protes::MinimizeResult value;
};

namespace {

thread_local std::string g_last_error;

protes_status fail(protes_status code, const char* message) {
  g_last_error = message;
  return code;
}

// Runs `body`, translating exceptions into status codes.
template <typename Fn>
protes_status guarded(Fn&& body) {
  try {
    body();
    g_last_error.clear();
    return PROTES_OK;
  } catch (const std::invalid_argument& e) {
    return fail(PROTES_ERR_INVALID, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PROTES_ERR_NOMEM, "out of memory");
  } catch (const std::exception& e) {
    return fail(PROTES_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(PROTES_ERR_RUNTIME, "unknown error");
  }
}

MultiIndex to_index(const int64_t* data, int64_t d) {
  return MultiIndex(data, data + d);
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* protes_last_error(void) { return g_last_error.c_str(); }

const char* protes_version(void) { return "0.1.0"; }

void protes_string_free(char* text) { delete[] text; }

/* ------------------------------------------------------------------ */

protes_status protes_tt_random(int64_t rank, const int64_t* shape, int64_t d,
                               uint64_t seed, protes_tt** out) {
  if (!shape || !out || d < 0)
    return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] {
    std::vector<int64_t> dims(shape, shape + d);
    *out = new protes_tt{TensorTrain::random(rank, dims, seed)};
  });
}

protes_status protes_tt_clone(const protes_tt* tt, protes_tt** out) {
  if (!tt || !out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] { *out = new protes_tt{tt->value}; });
}

void protes_tt_free(protes_tt* tt) { delete tt; }

int64_t protes_tt_ndim(const protes_tt* tt) {
  return tt ? tt->value.ndim() : 0;
}

protes_status protes_tt_shape(const protes_tt* tt, int64_t* out) {
  if (!tt || !out) return fail(PROTES_ERR_INVALID, "null argument");
  const auto& s = tt->value.shape();
  std::memcpy(out, s.data(), s.size() * sizeof(int64_t));
  return PROTES_OK;
}

protes_status protes_tt_ranks(const protes_tt* tt, int64_t* out) {
  if (!tt || !out) return fail(PROTES_ERR_INVALID, "null argument");
  const auto& r = tt->value.ranks();
  std::memcpy(out, r.data(), r.size() * sizeof(int64_t));
  return PROTES_OK;
}

protes_status protes_tt_eval(const protes_tt* tt, const int64_t* index,
                             double* out) {
  if (!tt || !index || !out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] { *out = tt->value.eval(to_index(index, tt->value.ndim())); });
}

protes_status protes_tt_logabs(const protes_tt* tt, const int64_t* index,
                               double* out) {
  if (!tt || !index || !out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded(
      [&] { *out = tt->value.log_abs(to_index(index, tt->value.ndim())); });
}

protes_status protes_tt_sample(const protes_tt* tt, int64_t count,
                               uint64_t seed, int64_t* out_indices) {
  if (!tt || !out_indices) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] {
    const protes::SampleBatch batch = protes::tt_sample(tt->value, count, seed);
    const int64_t d = tt->value.ndim();
    for (int64_t j = 0; j < count; ++j)
      std::memcpy(out_indices + j * d,
                  batch.indices[static_cast<std::size_t>(j)].data(),
                  static_cast<std::size_t>(d) * sizeof(int64_t));
  });
}

protes_status protes_tt_to_json(const protes_tt* tt, char** out) {
  if (!tt || !out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] { *out = copy_string(tt->value.to_json()); });
}

protes_status protes_tt_from_json(const char* text, protes_tt** out) {
  if (!text || !out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] { *out = new protes_tt{TensorTrain::from_json(text)}; });
}

/* ------------------------------------------------------------------ */

protes_status protes_tt_min_run_indicator(int64_t d, int64_t min_run,
                                          protes_tt** out) {
  if (!out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] {
    *out = new protes_tt{
        protes::build_indicator_tt(protes::min_run_spec(d, min_run))};
  });
}

protes_status protes_tt_pad_ranks(const protes_tt* tt, int64_t target_rank,
                                  uint64_t seed, protes_tt** out) {
  if (!tt || !out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] {
    *out = new protes_tt{protes::constrained_init(tt->value, target_rank, seed)};
  });
}

int protes_min_run_ok(const int64_t* x, int64_t d, int64_t min_run) {
  if (!x || d < 1 || min_run < 1) return -1;
  return protes::min_run_admissible(to_index(x, d), min_run) ? 1 : 0;
}

/* ------------------------------------------------------------------ */

protes_status protes_problem_custom(const char* name, const int64_t* shape,
                                    int64_t d, protes_eval_fn fn, void* user,
                                    protes_problem** out) {
  if (!name || !shape || !fn || !out || d < 1)
    return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] {
    std::vector<int64_t> dims(shape, shape + d);
    auto point_fn = [fn, user, d](const MultiIndex& x) {
      double value = 0.0;
      if (fn(user, x.data(), 1, d, &value) != 0)
        throw std::runtime_error("custom objective callback failed");
      return value;
    };
    *out = new protes_problem{protes::Problem(
        name, std::move(dims), std::move(point_fn),
        nlohmann::json{{"kind", "custom"}, {"name", name}, {"d", d}})};
  });
}

protes_status protes_problem_analytic(const char* name, int64_t d,
                                      int64_t grid, protes_problem** out) {
  if (!name || !out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded(
      [&] { *out = new protes_problem{protes::analytic_problem(name, d, grid)}; });
}

protes_status protes_problem_qubo(const char* kind, int64_t d, uint64_t seed,
                                  protes_problem** out) {
  if (!kind || !out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded(
      [&] { *out = new protes_problem{protes::qubo_problem(kind, d, seed)}; });
}

protes_status protes_problem_control(int64_t horizon, int64_t substeps,
                                     protes_problem** out) {
  if (!out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] {
    *out = new protes_problem{
        protes::control_problem(horizon, substeps > 0 ? substeps : 10)};
  });
}

protes_status protes_problem_control_constrained(int64_t horizon,
                                                 int64_t min_run,
                                                 int64_t substeps,
                                                 protes_problem** out,
                                                 protes_tt** out_indicator) {
  return guarded([&] {
    auto [problem, indicator] = protes::constrained_control_problem(
        horizon, min_run, substeps > 0 ? substeps : 10);
    if (out) *out = new protes_problem{std::move(problem)};
    if (out_indicator) *out_indicator = new protes_tt{std::move(indicator)};
  });
}

void protes_problem_free(protes_problem* problem) { delete problem; }

int64_t protes_problem_ndim(const protes_problem* problem) {
  return problem ? problem->value.ndim() : 0;
}

protes_status protes_problem_shape(const protes_problem* problem,
                                   int64_t* out) {
  if (!problem || !out) return fail(PROTES_ERR_INVALID, "null argument");
  const auto& s = problem->value.shape();
  std::memcpy(out, s.data(), s.size() * sizeof(int64_t));
  return PROTES_OK;
}

const char* protes_problem_name(const protes_problem* problem) {
  return problem ? problem->value.name().c_str() : "";
}

protes_status protes_problem_metadata_json(const protes_problem* problem,
                                           char** out) {
  if (!problem || !out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] { *out = copy_string(problem->value.metadata().dump()); });
}

protes_status protes_problem_eval(const protes_problem* problem,
                                  const int64_t* indices, int64_t count,
                                  double* out) {
  if (!problem || !indices || !out || count < 0)
    return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] {
    const int64_t d = problem->value.ndim();
    std::vector<MultiIndex> batch;
    batch.reserve(static_cast<std::size_t>(count));
    for (int64_t j = 0; j < count; ++j)
      batch.push_back(to_index(indices + j * d, d));
    const std::vector<double> values = problem->value.evaluate(batch);
    std::memcpy(out, values.data(), values.size() * sizeof(double));
  });
}

protes_status protes_problem_negated(const protes_problem* problem,
                                     protes_problem** out) {
  if (!problem || !out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] { *out = new protes_problem{problem->value.negated()}; });
}

/* ------------------------------------------------------------------ */

void protes_options_default(protes_options* options) {
  if (!options) return;
  const protes::ProtesConfig defaults;
  options->budget = defaults.budget;
  options->samples_per_iter = defaults.samples_per_iter;
  options->top_k = defaults.top_k;
  options->gd_steps = defaults.gd_steps;
  options->learning_rate = defaults.learning_rate;
  options->rank = defaults.rank;
  options->seed = defaults.seed;
  options->adam_beta1 = defaults.adam_beta1;
  options->adam_beta2 = defaults.adam_beta2;
  options->adam_eps = defaults.adam_eps;
}

protes_status protes_minimize(const protes_problem* problem,
                              const protes_options* options,
                              const protes_tt* init, protes_result** out) {
  if (!problem || !options || !out)
    return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] {
    protes::ProtesConfig config;
    config.budget = options->budget;
    config.samples_per_iter = options->samples_per_iter;
    config.top_k = options->top_k;
    config.gd_steps = options->gd_steps;
    config.learning_rate = options->learning_rate;
    config.rank = options->rank;
    config.seed = options->seed;
    config.adam_beta1 = options->adam_beta1;
    config.adam_beta2 = options->adam_beta2;
    config.adam_eps = options->adam_eps;
    *out = new protes_result{protes::protes_minimize(
        problem->value, config, init ? &init->value : nullptr)};
  });
}

void protes_result_free(protes_result* result) { delete result; }

double protes_result_best_value(const protes_result* result) {
  return result ? result->value.best_value : 0.0;
}

protes_status protes_result_best_index(const protes_result* result,
                                       int64_t* out) {
  if (!result || !out) return fail(PROTES_ERR_INVALID, "null argument");
  const MultiIndex& x = result->value.best_index;
  std::memcpy(out, x.data(), x.size() * sizeof(int64_t));
  return PROTES_OK;
}

int64_t protes_result_iterations(const protes_result* result) {
  return result ? static_cast<int64_t>(result->value.trace.size()) : 0;
}

protes_status protes_result_record(const protes_result* result, int64_t iter,
                                   int64_t* evals, double* best_value,
                                   double* wall_time_s) {
  if (!result || iter < 0 ||
      iter >= static_cast<int64_t>(result->value.trace.size()))
    return fail(PROTES_ERR_INVALID, "record index out of range");
  const protes::TraceRecord& rec =
      result->value.trace[static_cast<std::size_t>(iter)];
  if (evals) *evals = rec.evals_used;
  if (best_value) *best_value = rec.best_value;
  if (wall_time_s) *wall_time_s = rec.wall_time_s;
  return PROTES_OK;
}

protes_status protes_result_record_index(const protes_result* result,
                                         int64_t iter, int64_t* out) {
  if (!result || !out || iter < 0 ||
      iter >= static_cast<int64_t>(result->value.trace.size()))
    return fail(PROTES_ERR_INVALID, "record index out of range");
  const MultiIndex& x =
      result->value.trace[static_cast<std::size_t>(iter)].best_index;
  std::memcpy(out, x.data(), x.size() * sizeof(int64_t));
  return PROTES_OK;
}

protes_status protes_result_final_tt(const protes_result* result,
                                     protes_tt** out) {
  if (!result || !out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] { *out = new protes_tt{result->value.distribution}; });
}

protes_status protes_result_trace_jsonl(const protes_result* result,
                                        int include_timing, char** out) {
  if (!result || !out) return fail(PROTES_ERR_INVALID, "null argument");
  return guarded([&] {
    *out = copy_string(
        protes::trace_to_jsonl(result->value.trace, include_timing != 0));
  });
}

}  // extern "C"
