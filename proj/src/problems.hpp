#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "tensor_train.hpp"

namespace protes {

// A discrete black box: an index-space shape plus a pure, deterministic
// batched objective. Immutable after construction; batch evaluation may run
// in parallel but always returns results in input order.
class Problem {
 public:
  using PointFn = std::function<double(const MultiIndex&)>;

  Problem(std::string name, std::vector<std::int64_t> shape, PointFn fn,
          nlohmann::json metadata);

  const std::string& name() const { return name_; }
  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t ndim() const { return static_cast<std::int64_t>(shape_.size()); }
  const nlohmann::json& metadata() const { return metadata_; }

  double evaluate(const MultiIndex& x) const;
  std::vector<double> evaluate(std::span<const MultiIndex> batch) const;

  // The same problem with the objective negated (for maximization runs).
  Problem negated() const;

 private:
  std::string name_;
  std::vector<std::int64_t> shape_;
  PointFn fn_;
  nlohmann::json metadata_;
};

// ---------------------------------------------------------------------------
// Analytic benchmark functions, discretized on a uniform grid including both
// endpoints: x_i = a + n_i * (b - a) / (grid - 1). Standard published domains
// are used and recorded in the metadata.
// Names: ackley, alpine, exponential, griewank, michalewicz, piston, qing,
// rastrigin, schaffer, schwefel. Piston is fixed at d = 7.
Problem analytic_problem(const std::string& name, std::int64_t d,
                         std::int64_t grid);

// ---------------------------------------------------------------------------
// QUBO: minimize x^T Q x over binary vectors.

struct QuboInstance {
  Eigen::MatrixXd q;  // symmetric d x d
};

double qubo_value(const QuboInstance& instance, const MultiIndex& x);

using EdgeList = std::vector<std::pair<std::int64_t, std::int64_t>>;

// Seeded Erdos-Renyi graph G(d, p): each unordered pair independently kept
// with probability p.
EdgeList random_graph(std::int64_t d, double p, std::uint64_t seed);

// Max-cut: Q_ii = -deg(i), Q_ij = 1 on edges; minimizing x^T Q x maximizes
// the cut.
QuboInstance make_max_cut(std::int64_t d, const EdgeList& edges);

// Vertex cover with penalty: sum_i x_i + penalty * sum_edges (1-x_i)(1-x_j),
// constant penalty*|E| dropped.
QuboInstance make_vertex_cover(std::int64_t d, const EdgeList& edges,
                               double penalty);

// Quadratic knapsack: -x^T profits x + penalty * ((w.x)^2 - 2 capacity w.x),
// i.e. a quadratic capacity penalty with the constant penalty*capacity^2
// dropped.
QuboInstance make_quadratic_knapsack(const Eigen::MatrixXd& profits,
                                     const Eigen::VectorXd& weights,
                                     double capacity, double penalty);

// Binary knapsack as the diagonal special case of the above.
QuboInstance make_binary_knapsack(const Eigen::VectorXd& profits,
                                  const Eigen::VectorXd& weights,
                                  double capacity, double penalty);

// Seeded instances behind the four standard kinds: max_cut,
// min_vertex_cover, quadratic_knapsack, binary_knapsack. All generation
// parameters land in the metadata so instances are reproducible.
Problem qubo_problem(const std::string& kind, std::int64_t d,
                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Discrete-time optimal control of dz/dt = z^3 - x(t) with binary control,
// horizon T (d = T+1 modes), fixed-step classical RK4 with `substeps` steps
// per unit interval. Objective J = 1/2 sum_t (z(t) - z_ref)^2 over integer
// times t = 0..T. If |z| leaves [-1e6, 1e6] the objective is +infinity.
// x(T) is a decision variable whose interval lies beyond the horizon, so it
// never influences J (a known flat direction).
Problem control_problem(std::int64_t horizon, std::int64_t substeps = 10,
                        double z0 = 0.8, double z_ref = 0.7);

// The control problem paired with the min-run indicator tensor (all maximal
// 1-runs of the control must have length >= min_run), intended as the
// initial distribution of a constrained run.
std::pair<Problem, TensorTrain> constrained_control_problem(
    std::int64_t horizon, std::int64_t min_run = 3, std::int64_t substeps = 10);

}  // namespace protes
