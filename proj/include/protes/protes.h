/* protes -- gradient-free discrete optimization by sampling from a
 * probability tensor in tensor-train format.
 *
 * C API: opaque handles plus integer status codes. Every function that can
 * fail returns a protes_status; on failure protes_last_error() (thread
 * local) describes what went wrong. Objects returned through out-pointers
 * are owned by the caller and released with the matching *_free function.
 * Strings returned through char** are released with protes_string_free.
 */
#ifndef PROTES_H
#define PROTES_H

#include <stddef.h>
#include <stdint.h>

#if defined(__cplusplus)
extern "C" {
#endif

typedef enum protes_status {
  PROTES_OK = 0,
  PROTES_ERR_INVALID = 1, /* bad argument or precondition violation */
  PROTES_ERR_RUNTIME = 2, /* failure while computing */
  PROTES_ERR_NOMEM = 3
} protes_status;

/* Message of the most recent failure on this thread; empty string if none. */
const char* protes_last_error(void);

const char* protes_version(void);

void protes_string_free(char* text);

/* ------------------------------------------------------------------ */
/* Tensor train                                                        */

typedef struct protes_tt protes_tt;

/* Rank-R tensor train over the given mode sizes with entries i.i.d.
 * uniform on (0,1); deterministic in the seed. */
protes_status protes_tt_random(int64_t rank, const int64_t* shape, int64_t d,
                               uint64_t seed, protes_tt** out);
protes_status protes_tt_clone(const protes_tt* tt, protes_tt** out);
void protes_tt_free(protes_tt* tt);

int64_t protes_tt_ndim(const protes_tt* tt);
/* `out` must hold ndim entries (shape) / ndim+1 entries (ranks). */
protes_status protes_tt_shape(const protes_tt* tt, int64_t* out);
protes_status protes_tt_ranks(const protes_tt* tt, int64_t* out);

/* Exact element value at a 0-based multi-index of length ndim. */
protes_status protes_tt_eval(const protes_tt* tt, const int64_t* index,
                             double* out);
/* log(|element| + 1e-300), stable for large dimension counts. */
protes_status protes_tt_logabs(const protes_tt* tt, const int64_t* index,
                               double* out);

/* Draws `count` multi-indices with probability proportional to the
 * tensor's absolute values into out_indices (count*ndim entries, sample
 * major). Identical output regardless of thread count. */
protes_status protes_tt_sample(const protes_tt* tt, int64_t count,
                               uint64_t seed, int64_t* out_indices);

/* JSON round trip: {"shape": [...], "ranks": [...], "cores": [[...], ...]},
 * bit-exact for finite values. */
protes_status protes_tt_to_json(const protes_tt* tt, char** out);
protes_status protes_tt_from_json(const char* text, protes_tt** out);

/* ------------------------------------------------------------------ */
/* Constraint indicators                                               */

/* 0/1 indicator over binary strings of length d: 1 exactly when every
 * maximal run of ones has length >= min_run. */
protes_status protes_tt_min_run_indicator(int64_t d, int64_t min_run,
                                          protes_tt** out);

/* Pads interior ranks up to target_rank with tiny seeded noise so the
 * tensor can serve as a trainable initial distribution; values change by a
 * negligible amount. */
protes_status protes_tt_pad_ranks(const protes_tt* tt, int64_t target_rank,
                                  uint64_t seed, protes_tt** out);

/* 1 if the binary string satisfies the min-run constraint, 0 if not,
 * -1 on bad arguments. */
int protes_min_run_ok(const int64_t* x, int64_t d, int64_t min_run);

/* ------------------------------------------------------------------ */
/* Problems                                                            */

typedef struct protes_problem protes_problem;

/* Batched objective callback: evaluate `count` multi-indices of length d
 * (index-major layout) into out. Return 0 on success; any other value
 * aborts the evaluation. Must be pure and thread safe. */
typedef int (*protes_eval_fn)(void* user, const int64_t* indices,
                              int64_t count, int64_t d, double* out);

protes_status protes_problem_custom(const char* name, const int64_t* shape,
                                    int64_t d, protes_eval_fn fn, void* user,
                                    protes_problem** out);

/* Discretized analytic benchmark on a uniform grid with `grid` nodes per
 * mode: ackley, alpine, exponential, griewank, michalewicz, piston (d=7),
 * qing, rastrigin, schaffer, schwefel. */
protes_status protes_problem_analytic(const char* name, int64_t d,
                                      int64_t grid, protes_problem** out);

/* Seeded QUBO instance: max_cut, min_vertex_cover, quadratic_knapsack or
 * binary_knapsack. */
protes_status protes_problem_qubo(const char* kind, int64_t d, uint64_t seed,
                                  protes_problem** out);

/* Binary optimal control of z' = z^3 - x over horizon T (d = T+1 modes),
 * fixed-step RK4 with `substeps` steps per unit interval (pass 0 for the
 * default 10). Blow-ups yield +inf. */
protes_status protes_problem_control(int64_t horizon, int64_t substeps,
                                     protes_problem** out);

/* The control problem plus the min-run indicator tensor to be used as the
 * initial distribution. Either out pointer may be NULL. */
protes_status protes_problem_control_constrained(int64_t horizon,
                                                 int64_t min_run,
                                                 int64_t substeps,
                                                 protes_problem** out,
                                                 protes_tt** out_indicator);

void protes_problem_free(protes_problem* problem);

int64_t protes_problem_ndim(const protes_problem* problem);
protes_status protes_problem_shape(const protes_problem* problem, int64_t* out);
const char* protes_problem_name(const protes_problem* problem);
/* Generation parameters as a JSON document (domains, seeds, instance data),
 * enough to reproduce the instance exactly. */
protes_status protes_problem_metadata_json(const protes_problem* problem,
                                           char** out);

/* Evaluates `count` multi-indices (index-major) into out. */
protes_status protes_problem_eval(const protes_problem* problem,
                                  const int64_t* indices, int64_t count,
                                  double* out);

/* Same problem with the objective negated (for maximization). */
protes_status protes_problem_negated(const protes_problem* problem,
                                     protes_problem** out);

/* ------------------------------------------------------------------ */
/* Optimizer                                                           */

typedef struct protes_options {
  int64_t budget;           /* total objective evaluations */
  int64_t samples_per_iter; /* candidates drawn per iteration */
  int64_t top_k;            /* candidates kept per iteration */
  int64_t gd_steps;         /* gradient ascent steps per iteration */
  double learning_rate;
  int64_t rank;             /* TT-rank of the search distribution */
  uint64_t seed;
  double adam_beta1;
  double adam_beta2;
  double adam_eps;
} protes_options;

/* budget 10000, samples 100, top_k 10, gd_steps 1, rate 0.05, rank 5,
 * seed 0, betas 0.9/0.999, eps 1e-8. */
void protes_options_default(protes_options* options);

typedef struct protes_result protes_result;

/* Runs the optimization loop. `init` (may be NULL) replaces the random
 * initial distribution; its shape must match the problem. The objective is
 * called at most options->budget times. */
protes_status protes_minimize(const protes_problem* problem,
                              const protes_options* options,
                              const protes_tt* init, protes_result** out);

/* Constrained variant: candidates are sampled from the elementwise product
 * mask * p, so indices the mask zeroes are never proposed. Pass the 0/1
 * indicator tensor as the mask (and usually its padded form as init). */
protes_status protes_minimize_constrained(const protes_problem* problem,
                                          const protes_options* options,
                                          const protes_tt* init,
                                          const protes_tt* mask,
                                          protes_result** out);

void protes_result_free(protes_result* result);

double protes_result_best_value(const protes_result* result);
/* `out` must hold ndim entries. */
protes_status protes_result_best_index(const protes_result* result,
                                       int64_t* out);
int64_t protes_result_iterations(const protes_result* result);
/* Per-iteration records, iter in [0, iterations). Any out pointer may be
 * NULL. */
protes_status protes_result_record(const protes_result* result, int64_t iter,
                                   int64_t* evals, double* best_value,
                                   double* wall_time_s);
protes_status protes_result_record_index(const protes_result* result,
                                         int64_t iter, int64_t* out);
/* The trained distribution at the end of the run. */
protes_status protes_result_final_tt(const protes_result* result,
                                     protes_tt** out);
/* Trace as JSON lines; include_timing 0 zeroes the t_s field so reruns are
 * byte-identical. */
protes_status protes_result_trace_jsonl(const protes_result* result,
                                        int include_timing, char** out);

#if defined(__cplusplus)
} /* extern "C" */
#endif

#endif /* PROTES_H */
