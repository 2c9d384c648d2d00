#include "sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "parallel.hpp"
#include "rng.hpp"

namespace protes {

std::int64_t categorical_draw(std::span<const double> weights, double u) {
  double total = 0.0;
  std::int64_t last_positive = -1;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    const double w = weights[n];
    if (std::isnan(w)) throw std::invalid_argument("zero-sum or NaN weights");
    if (w < 0.0) throw std::invalid_argument("negative weight");
    if (w > 0.0) last_positive = static_cast<std::int64_t>(n);
    total += w;
  }
  if (!(total > 0.0) || !std::isfinite(total))
    throw std::invalid_argument("zero-sum or NaN weights");

  const double threshold = u * total;
  double cumulative = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    cumulative += weights[n];
    if (cumulative > threshold) return static_cast<std::int64_t>(n);
  }
  // u*total can round up to the full mass; fall back to the last atom.
  return last_positive;
}

SampleBatch tt_sample(const TensorTrain& tt, std::int64_t count,
                      std::uint64_t rng_seed) {
  if (count < 1) throw std::invalid_argument("sample count must be positive");

  // The tensor does not change mid-batch, so the right interfaces are
  // shared by every sample.
  const std::vector<Eigen::VectorXd> suffix = tt.right_interfaces();
  const std::int64_t d = tt.ndim();
  const auto& cores = tt.cores();

  SampleBatch batch;
  batch.rng_seed = rng_seed;
  batch.indices.assign(static_cast<std::size_t>(count), MultiIndex());

  parallel_for(count, [&](std::int64_t j) {
    SplitMix64 rng(substream(rng_seed, static_cast<std::uint64_t>(j)));
    MultiIndex x(static_cast<std::size_t>(d));
    Eigen::RowVectorXd left = Eigen::RowVectorXd::Ones(1);
    std::vector<double> weights;

    for (std::int64_t i = 0; i < d; ++i) {
      const TtCore& core = cores[static_cast<std::size_t>(i)];
      const Eigen::VectorXd& right = suffix[static_cast<std::size_t>(i) + 1];

      // One pass over the unfolded core gives every candidate row
      // left * G[:, n, :] at once.
      const Eigen::RowVectorXd rows = left * core.unfold();
      weights.assign(static_cast<std::size_t>(core.mode_size), 0.0);
      bool any_positive = false;
      for (Eigen::Index n = 0; n < core.mode_size; ++n) {
        const double q =
            std::abs(rows.segment(n * core.right_rank, core.right_rank).dot(right));
        weights[static_cast<std::size_t>(n)] = q;
        any_positive = any_positive || q > 0.0;
      }
      if (!any_positive)
        throw std::runtime_error("degenerate distribution at mode " +
                                 std::to_string(i));

      const std::int64_t n = categorical_draw(weights, rng.next_unit());
      x[static_cast<std::size_t>(i)] = n;
      left = rows.segment(n * core.right_rank, core.right_rank);
      left /= left.cwiseAbs().maxCoeff();
    }
    batch.indices[static_cast<std::size_t>(j)] = std::move(x);
  });
  return batch;
}

}  // namespace protes
