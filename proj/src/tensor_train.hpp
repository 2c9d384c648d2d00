#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace protes {

// Multi-index into a d-dimensional tensor; component i lies in [0, N_i).
// Indices are 0-based throughout the library (the usual tensor literature
// counts modes from 1).
using MultiIndex = std::vector<std::int64_t>;

// One order-3 tensor-train core, stored row-major as
// (left_rank, mode_size, right_rank).
struct TtCore {
  Eigen::Index left_rank = 0;
  Eigen::Index mode_size = 0;
  Eigen::Index right_rank = 0;
  std::vector<double> data;

  TtCore() = default;
  TtCore(Eigen::Index l, Eigen::Index n, Eigen::Index r, double fill = 0.0)
      : left_rank(l), mode_size(n), right_rank(r),
        data(static_cast<std::size_t>(l * n * r), fill) {}

  double& at(Eigen::Index a, Eigen::Index n, Eigen::Index b) {
    return data[static_cast<std::size_t>((a * mode_size + n) * right_rank + b)];
  }
  double at(Eigen::Index a, Eigen::Index n, Eigen::Index b) const {
    return data[static_cast<std::size_t>((a * mode_size + n) * right_rank + b)];
  }

  using SliceMap =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>,
                 Eigen::Unaligned, Eigen::OuterStride<>>;

  // The (left_rank x right_rank) matrix slice G[:, n, :].
  SliceMap slice(Eigen::Index n) const {
    return SliceMap(data.data() + n * right_rank, left_rank, right_rank,
                    Eigen::OuterStride<>(mode_size * right_rank));
  }

  // The (left_rank x mode_size*right_rank) row-major unfolding; column block
  // n*right_rank..(n+1)*right_rank-1 is slice(n). Free of copies because the
  // storage order already matches.
  using UnfoldMap =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>;
  UnfoldMap unfold() const {
    return UnfoldMap(data.data(), left_rank, mode_size * right_rank);
  }
};

// Immutable-by-convention tensor-train representation of a d-dimensional
// real tensor: element(x) is the chained product of per-mode core slices.
// All read operations are const and safe to share across threads; mutation
// (the optimizer's gradient updates) requires exclusive access.
class TensorTrain {
 public:
  // Validates the rank chain (boundary ranks 1, adjacent cores agree),
  // positive mode sizes and finiteness of every entry.
  explicit TensorTrain(std::vector<TtCore> cores);

  // Rank-R tensor train with every core entry i.i.d. uniform on the open
  // interval (0,1). Boundary ranks are 1. Deterministic in the seed.
  static TensorTrain random(std::int64_t rank,
                            const std::vector<std::int64_t>& shape,
                            std::uint64_t seed);

  std::int64_t ndim() const { return static_cast<std::int64_t>(cores_.size()); }
  const std::vector<std::int64_t>& shape() const { return shape_; }
  const std::vector<std::int64_t>& ranks() const { return ranks_; }
  const std::vector<TtCore>& cores() const { return cores_; }
  std::vector<TtCore>& mutable_cores() { return cores_; }

  // Exact element evaluation: G_1[0,x_1,:] * G_2[:,x_2,:] * ... * G_d[:,x_d,0].
  double eval(const MultiIndex& x) const;

  // log(|eval(x)| + kValueFloor), computed without overflow or underflow by
  // rescaling the running interface vector to unit max-norm after every
  // mode and accumulating the logs of the scales.
  double log_abs(const MultiIndex& x) const;

  // Right interface directions: entry i (1 <= i <= d) is the unit-max-norm
  // direction of (sum_n |G_i| slices) * ... applied from the right, a
  // vector of length ranks()[i]. Entry d is [1]; entry 0 is unused. Scales
  // are discarded -- only directions matter for conditional sampling.
  // Absolute values make the result a valid unnormalized marginalization
  // even when core entries are negative.
  std::vector<Eigen::VectorXd> right_interfaces() const;

  // JSON document {"shape": [...], "ranks": [...], "cores": [[...], ...]}
  // with cores flattened row-major. Round-trips bit-exactly for finite
  // doubles.
  std::string to_json() const;
  static TensorTrain from_json(const std::string& text);

  // Floor added inside log_abs so exact zeros stay finite. Far below any
  // meaningful probability scale.
  static constexpr double kValueFloor = 1e-300;

 private:
  void check_index(const MultiIndex& x) const;

  std::vector<TtCore> cores_;
  std::vector<std::int64_t> shape_;
  std::vector<std::int64_t> ranks_;
};

}  // namespace protes
