#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "problems.hpp"
#include "sampler.hpp"
#include "tensor_train.hpp"

namespace protes {

// Hyperparameters of one optimization run. Defaults are the fixed set used
// for every benchmark: 100 samples, top 10, one ascent step, rate 0.05,
// rank 5.
struct ProtesConfig {
  std::int64_t budget = 10'000;        // total objective evaluations (M)
  std::int64_t samples_per_iter = 100; // candidates drawn per iteration (K)
  std::int64_t top_k = 10;             // candidates kept per iteration (k)
  std::int64_t gd_steps = 1;           // ascent steps per iteration
  double learning_rate = 0.05;
  std::int64_t rank = 5;               // TT-rank of the distribution
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;  // throws std::invalid_argument on bad values
};

// Adam accumulators, one pair per core entry, plus the step counter. One
// state instance persists across the whole run.
struct AdamState {
  explicit AdamState(const TensorTrain& tt, double beta1 = 0.9,
                     double beta2 = 0.999, double eps = 1e-8);
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::int64_t step = 0;
  double beta1;
  double beta2;
  double eps;
};

// Gradient arrays mirroring the core storage layout exactly.
using CoreGrads = std::vector<std::vector<double>>;

struct TraceRecord {
  std::int64_t iter = 0;        // 1-based iteration number
  std::int64_t evals_used = 0;  // cumulative objective evaluations
  double best_value = 0.0;
  MultiIndex best_index;
  double wall_time_s = 0.0;     // seconds since the run started
};
using RunTrace = std::vector<TraceRecord>;

struct MinimizeResult {
  MultiIndex best_index;
  double best_value = 0.0;
  RunTrace trace;
  TensorTrain distribution;  // the trained probability tensor
};

// Log-likelihood of the selected candidates: sum of log|p[x]| over the
// selection (duplicates contribute duplicate terms).
double loss(const TensorTrain& tt, std::span<const MultiIndex> selected);

// Closed-form gradient of `loss` with respect to every core entry. For one
// index only the chosen slice of each core receives mass: the outer product
// of the prefix and suffix interface vectors divided by the element value.
// One forward and one backward pass per index, both max-norm rescaled, keep
// everything finite for large d. Throws when some selected index has
// |p[x]| <= the value floor.
CoreGrads loss_gradient(const TensorTrain& tt,
                        std::span<const MultiIndex> selected);

// One Adam ascent step (maximizing) with bias correction, updating the
// cores in place. Throws on non-finite gradients.
void adam_step(TensorTrain& tt, const CoreGrads& grads, AdamState& state,
               double learning_rate);

// Log of the exact probability that tt_sample assigns to x: the sum over
// modes of the log normalized conditional weights. Unlike log_abs this is
// invariant to the tensor's overall scale.
double sample_log_prob(const TensorTrain& tt, const MultiIndex& x);

// Exact gradient of sum_i sample_log_prob(tt, selected[i]) with respect to
// every core entry. This is the likelihood the optimization loop ascends:
// raising the sampling probability of the selected candidates necessarily
// lowers everyone else's, which is what makes the distribution concentrate.
// Derivatives flow through the conditional numerators, the per-mode
// normalizations, the prefix chain and the absolute-value right
// interfaces; the max-norm rescalings cancel exactly and are treated as
// constants.
CoreGrads sample_log_prob_gradient(const TensorTrain& tt,
                                   std::span<const MultiIndex> selected);

// Positions of the k smallest values; ties broken by smaller position.
std::vector<std::int64_t> select_top_k(std::span<const double> values,
                                       std::int64_t k);

// Called once per iteration with the raw sampled batch and its objective
// values (before any NaN policy is applied).
using BatchObserver = std::function<void(
    std::int64_t iter, const SampleBatch& batch, std::span<const double> values)>;

// The optimization loop: repeat budget/K times -- sample K candidates from
// the distribution, evaluate them, keep the top k, update the running best
// on strict improvement, then take gd_steps Adam ascent steps on the
// selected candidates' log-likelihood. Non-finite objective values are
// treated as +infinity: never selected, never best. `init` (when given)
// replaces the random initial distribution and must match the problem
// shape; this is how constrained runs inject the indicator tensor.
//
// `sample_mask` (when given) multiplies the distribution elementwise for
// sampling purposes only: candidates are drawn from mask * p, so indices
// the mask zeroes are never proposed, while the gradient updates still act
// on p itself. Constrained runs pass the 0/1 indicator tensor here, which
// keeps every sampled candidate admissible for the whole run, not just
// under the initial distribution.
MinimizeResult protes_minimize(const Problem& problem,
                               const ProtesConfig& config,
                               const TensorTrain* init = nullptr,
                               const BatchObserver& observer = {},
                               const TensorTrain* sample_mask = nullptr);

}  // namespace protes
