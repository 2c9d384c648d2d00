#include "problems.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "constraints.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace protes {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBlowupBound = 1e6;

constexpr std::uint64_t kSaltGraph = 0x47524150;
constexpr std::uint64_t kSaltWeights = 0x57454947;
constexpr std::uint64_t kSaltProfits = 0x50524F46;

}  // namespace

Problem::Problem(std::string name, std::vector<std::int64_t> shape, PointFn fn,
                 nlohmann::json metadata)
    : name_(std::move(name)), shape_(std::move(shape)), fn_(std::move(fn)),
      metadata_(std::move(metadata)) {
  if (shape_.empty()) throw std::invalid_argument("empty shape");
  for (std::int64_t n : shape_)
    if (n < 1) throw std::invalid_argument("mode sizes must be positive");
}

double Problem::evaluate(const MultiIndex& x) const {
  if (static_cast<std::int64_t>(x.size()) != ndim())
    throw std::invalid_argument("index length does not match problem dimension");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < 0 || x[i] >= shape_[i])
      throw std::invalid_argument("index out of bounds at mode " +
                                  std::to_string(i));
  return fn_(x);
}

std::vector<double> Problem::evaluate(std::span<const MultiIndex> batch) const {
  std::vector<double> out(batch.size());
  parallel_for(static_cast<std::int64_t>(batch.size()), [&](std::int64_t i) {
    out[static_cast<std::size_t>(i)] =
        evaluate(batch[static_cast<std::size_t>(i)]);
  });
  return out;
}

Problem Problem::negated() const {
  nlohmann::json meta = metadata_;
  meta["negated"] = !meta.value("negated", false);
  PointFn inner = fn_;
  return Problem(name_, shape_,
                 [inner](const MultiIndex& x) { return -inner(x); },
                 std::move(meta));
}

// ---------------------------------------------------------------------------
// Analytic benchmarks.

namespace {

struct GridSpec {
  std::vector<double> lower, upper;
  std::int64_t grid;

  double point(std::size_t i, std::int64_t n) const {
    return lower[i] + static_cast<double>(n) * (upper[i] - lower[i]) /
                          static_cast<double>(grid - 1);
  }
  std::vector<double> points(const MultiIndex& x) const {
    std::vector<double> p(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      p[i] = point(i, x[i]);
    return p;
  }
};

double ackley(const std::vector<double>& x) {
  const double a = 20.0, b = 0.2, c = 2.0 * std::numbers::pi;
  double sq = 0.0, cs = 0.0;
  for (double v : x) {
    sq += v * v;
    cs += std::cos(c * v);
  }
  const double d = static_cast<double>(x.size());
  return -a * std::exp(-b * std::sqrt(sq / d)) - std::exp(cs / d) + a +
         std::numbers::e;
}

double alpine(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v * std::sin(v) + 0.1 * v);
  return s;
}

double exponential_fn(const std::vector<double>& x) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  return -std::exp(-0.5 * sq);
}

double griewank(const std::vector<double>& x) {
  double sq = 0.0, prod = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sq += x[i] * x[i];
    prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
  }
  return sq / 4000.0 - prod + 1.0;
}

double michalewicz(const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double si = std::sin(static_cast<double>(i + 1) * x[i] * x[i] /
                               std::numbers::pi);
    s += std::sin(x[i]) * std::pow(si, 20.0);
  }
  return -s;
}

// Piston cycle time; the 7 parameters are (mass, surface, gas volume,
// spring constant, pressure, ambient T, filling T).
double piston(const std::vector<double>& x) {
  const double m = x[0], s = x[1], v0 = x[2], k = x[3], p0 = x[4], ta = x[5],
               t0 = x[6];
  const double a = p0 * s + 19.62 * m - k * v0 / s;
  const double pv = p0 * v0 / t0;
  const double v = s / (2.0 * k) * (std::sqrt(a * a + 4.0 * k * pv * ta) - a);
  return 2.0 * std::numbers::pi * std::sqrt(m / (k + s * s * pv * ta / (v * v)));
}

double qing(const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = x[i] * x[i] - static_cast<double>(i + 1);
    s += t * t;
  }
  return s;
}

double rastrigin(const std::vector<double>& x) {
  double s = 10.0 * static_cast<double>(x.size());
  for (double v : x)
    s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
  return s;
}

double schaffer(const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double r2 = x[i] * x[i] + x[i + 1] * x[i + 1];
    const double si = std::sin(std::sqrt(r2));
    const double den = 1.0 + 0.001 * r2;
    s += 0.5 + (si * si - 0.5) / (den * den);
  }
  return s;
}

double schwefel(const std::vector<double>& x) {
  double s = 418.9829 * static_cast<double>(x.size());
  for (double v : x) s -= v * std::sin(std::sqrt(std::abs(v)));
  return s;
}

}  // namespace

Problem analytic_problem(const std::string& name, std::int64_t d,
                         std::int64_t grid) {
  if (grid < 2) throw std::invalid_argument("grid must have at least 2 nodes");
  if (d < 1) throw std::invalid_argument("dimension must be positive");

  double (*fn)(const std::vector<double>&) = nullptr;
  double lo = 0.0, hi = 0.0;
  if (name == "ackley") {
    fn = ackley; lo = -32.768; hi = 32.768;
  } else if (name == "alpine") {
    fn = alpine; lo = -10.0; hi = 10.0;
  } else if (name == "exponential") {
    fn = exponential_fn; lo = -1.0; hi = 1.0;
  } else if (name == "griewank") {
    fn = griewank; lo = -600.0; hi = 600.0;
  } else if (name == "michalewicz") {
    fn = michalewicz; lo = 0.0; hi = std::numbers::pi;
  } else if (name == "qing") {
    fn = qing; lo = -500.0; hi = 500.0;
  } else if (name == "rastrigin") {
    fn = rastrigin; lo = -5.12; hi = 5.12;
  } else if (name == "schaffer") {
    fn = schaffer; lo = -100.0; hi = 100.0;
  } else if (name == "schwefel") {
    fn = schwefel; lo = -500.0; hi = 500.0;
  } else if (name != "piston") {
    throw std::invalid_argument("unknown analytic problem: " + name);
  }

  GridSpec spec;
  spec.grid = grid;
  if (name == "piston") {
    if (d != 7)
      throw std::invalid_argument("piston is a fixed 7-dimensional problem");
    fn = piston;
    spec.lower = {30.0, 0.005, 0.002, 1000.0, 90000.0, 290.0, 340.0};
    spec.upper = {60.0, 0.020, 0.010, 5000.0, 110000.0, 296.0, 360.0};
  } else {
    spec.lower.assign(static_cast<std::size_t>(d), lo);
    spec.upper.assign(static_cast<std::size_t>(d), hi);
  }

  nlohmann::json meta{{"kind", "analytic"},
                      {"name", name},
                      {"d", d},
                      {"grid", grid},
                      {"domain_lower", spec.lower},
                      {"domain_upper", spec.upper}};
  std::vector<std::int64_t> shape(static_cast<std::size_t>(d), grid);
  return Problem(name, std::move(shape),
                 [spec, fn](const MultiIndex& x) { return fn(spec.points(x)); },
                 std::move(meta));
}

// ---------------------------------------------------------------------------
// QUBO.

double qubo_value(const QuboInstance& instance, const MultiIndex& x) {
  const Eigen::Index d = instance.q.rows();
  double value = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (x[static_cast<std::size_t>(i)] == 0) continue;
    value += instance.q(i, i);
    for (Eigen::Index j = i + 1; j < d; ++j)
      if (x[static_cast<std::size_t>(j)] != 0)
        value += 2.0 * instance.q(i, j);
  }
  return value;
}

EdgeList random_graph(std::int64_t d, double p, std::uint64_t seed) {
  SplitMix64 rng(seed);
  EdgeList edges;
  for (std::int64_t i = 0; i < d; ++i)
    for (std::int64_t j = i + 1; j < d; ++j)
      if (rng.next_unit() < p) edges.emplace_back(i, j);
  return edges;
}

QuboInstance make_max_cut(std::int64_t d, const EdgeList& edges) {
  QuboInstance inst{Eigen::MatrixXd::Zero(d, d)};
  for (const auto& [i, j] : edges) {
    inst.q(i, j) += 1.0;
    inst.q(j, i) += 1.0;
    inst.q(i, i) -= 1.0;
    inst.q(j, j) -= 1.0;
  }
  return inst;
}

QuboInstance make_vertex_cover(std::int64_t d, const EdgeList& edges,
                               double penalty) {
  QuboInstance inst{Eigen::MatrixXd::Zero(d, d)};
  for (std::int64_t i = 0; i < d; ++i) inst.q(i, i) = 1.0;
  for (const auto& [i, j] : edges) {
    inst.q(i, i) -= penalty;
    inst.q(j, j) -= penalty;
    inst.q(i, j) += penalty / 2.0;
    inst.q(j, i) += penalty / 2.0;
  }
  return inst;
}

QuboInstance make_quadratic_knapsack(const Eigen::MatrixXd& profits,
                                     const Eigen::VectorXd& weights,
                                     double capacity, double penalty) {
  QuboInstance inst{-profits};
  inst.q += penalty * (weights * weights.transpose());
  inst.q.diagonal() -= 2.0 * penalty * capacity * weights;
  return inst;
}

QuboInstance make_binary_knapsack(const Eigen::VectorXd& profits,
                                  const Eigen::VectorXd& weights,
                                  double capacity, double penalty) {
  return make_quadratic_knapsack(profits.asDiagonal().toDenseMatrix(), weights,
                                 capacity, penalty);
}

namespace {

Problem qubo_to_problem(std::string name, QuboInstance inst,
                        nlohmann::json meta) {
  const std::int64_t d = inst.q.rows();
  std::vector<std::int64_t> shape(static_cast<std::size_t>(d), 2);
  auto shared = std::make_shared<QuboInstance>(std::move(inst));
  return Problem(std::move(name), std::move(shape),
                 [shared](const MultiIndex& x) { return qubo_value(*shared, x); },
                 std::move(meta));
}

nlohmann::json edges_json(const EdgeList& edges) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [i, j] : edges) out.push_back({i, j});
  return out;
}

}  // namespace

Problem qubo_problem(const std::string& kind, std::int64_t d,
                     std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  nlohmann::json meta{{"kind", "qubo"}, {"name", kind}, {"d", d}, {"seed", seed}};

  if (kind == "max_cut") {
    EdgeList edges = random_graph(d, 0.5, substream(seed, kSaltGraph));
    meta["edge_probability"] = 0.5;
    meta["edges"] = edges_json(edges);
    return qubo_to_problem(kind, make_max_cut(d, edges), std::move(meta));
  }
  if (kind == "min_vertex_cover") {
    EdgeList edges = random_graph(d, 0.5, substream(seed, kSaltGraph));
    const double penalty = 8.0;
    meta["edge_probability"] = 0.5;
    meta["penalty"] = penalty;
    meta["edges"] = edges_json(edges);
    return qubo_to_problem(kind, make_vertex_cover(d, edges, penalty),
                           std::move(meta));
  }
  if (kind == "quadratic_knapsack") {
    SplitMix64 wrng(substream(seed, kSaltWeights));
    SplitMix64 prng(substream(seed, kSaltProfits));
    Eigen::VectorXd weights(d);
    for (std::int64_t i = 0; i < d; ++i) weights[i] = wrng.next_unit();
    Eigen::MatrixXd profits(d, d);
    for (std::int64_t i = 0; i < d; ++i)
      for (std::int64_t j = i; j < d; ++j)
        profits(i, j) = profits(j, i) = prng.next_unit();
    const double capacity = 1.0;
    const double penalty = 10.0 * profits.maxCoeff();
    meta["weights"] = std::vector<double>(weights.data(), weights.data() + d);
    meta["capacity"] = capacity;
    meta["penalty"] = penalty;
    meta["profit_distribution"] = "uniform(0,1) symmetric";
    meta["weight_distribution"] = "uniform(0,1)";
    return qubo_to_problem(
        kind, make_quadratic_knapsack(profits, weights, capacity, penalty),
        std::move(meta));
  }
  if (kind == "binary_knapsack") {
    SplitMix64 wrng(substream(seed, kSaltWeights));
    SplitMix64 prng(substream(seed, kSaltProfits));
    Eigen::VectorXd weights(d), profits(d);
    for (std::int64_t i = 0; i < d; ++i)
      weights[i] = 5.0 + static_cast<double>(wrng.next_below(16));  // {5..20}
    for (std::int64_t i = 0; i < d; ++i)
      profits[i] = 50.0 + static_cast<double>(prng.next_below(51));  // {50..100}
    const double capacity = 1000.0;
    const double penalty = 10.0 * profits.maxCoeff();
    meta["weights"] = std::vector<double>(weights.data(), weights.data() + d);
    meta["profits"] = std::vector<double>(profits.data(), profits.data() + d);
    meta["capacity"] = capacity;
    meta["penalty"] = penalty;
    return qubo_to_problem(
        kind, make_binary_knapsack(profits, weights, capacity, penalty),
        std::move(meta));
  }
  throw std::invalid_argument("unknown qubo kind: " + kind);
}

// ---------------------------------------------------------------------------
// Optimal control.

namespace {

// RK4 over one control slot of the given length with constant control u;
// returns the end state, or +inf once the state escapes.
double integrate_slot(double z, double u, double slot, std::int64_t substeps) {
  const double h = slot / static_cast<double>(substeps);
  for (std::int64_t s = 0; s < substeps; ++s) {
    const auto f = [u](double v) { return v * v * v - u; };
    const double k1 = f(z);
    const double k2 = f(z + 0.5 * h * k1);
    const double k3 = f(z + 0.5 * h * k2);
    const double k4 = f(z + h * k3);
    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(z) || std::abs(z) > kBlowupBound) return kInf;
  }
  return z;
}

}  // namespace

Problem control_problem(std::int64_t horizon, std::int64_t substeps, double z0,
                        double z_ref) {
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
  if (substeps < 1) throw std::invalid_argument("substeps must be positive");

  // T switching slots tile the unit time span; finer horizons mean finer
  // control, not a longer experiment. This is the discretization that
  // reproduces the reported objective scale: with slots of length 1/T the
  // state is steerable to within O(1/T) of the reference, and J retains
  // only the fixed 0.5*(z0 - z_ref)^2 term plus the tracking error.
  const std::int64_t d = horizon + 1;
  const double slot = 1.0 / static_cast<double>(horizon);
  nlohmann::json meta{{"kind", "control"},       {"name", "control"},
                      {"T", horizon},            {"substeps", substeps},
                      {"z0", z0},                {"z_ref", z_ref},
                      {"equation", "z' = z^3 - x"},
                      {"time_span", 1.0},
                      {"slot_duration", slot},
                      {"blowup_bound", kBlowupBound}};

  auto fn = [horizon, substeps, z0, z_ref, slot](const MultiIndex& x) {
    double z = z0;
    double acc = (z - z_ref) * (z - z_ref);
    for (std::int64_t t = 0; t < horizon; ++t) {
      z = integrate_slot(z, static_cast<double>(x[static_cast<std::size_t>(t)]),
                         slot, substeps);
      if (!std::isfinite(z)) return kInf;
      acc += (z - z_ref) * (z - z_ref);
    }
    return 0.5 * acc;
  };
  return Problem("control", std::vector<std::int64_t>(static_cast<std::size_t>(d), 2),
                 std::move(fn), std::move(meta));
}

std::pair<Problem, TensorTrain> constrained_control_problem(
    std::int64_t horizon, std::int64_t min_run, std::int64_t substeps) {
  if (min_run < 1) throw std::invalid_argument("min_run must be positive");
  if (horizon < min_run)
    throw std::invalid_argument("horizon must be at least min_run");
  Problem base = control_problem(horizon, substeps);
  nlohmann::json meta = base.metadata();
  meta["name"] = "control_constrained";
  meta["min_run"] = min_run;
  Problem named("control_constrained", base.shape(),
                [base](const MultiIndex& x) { return base.evaluate(x); },
                std::move(meta));
  TensorTrain indicator = build_indicator_tt(min_run_spec(horizon + 1, min_run));
  return {std::move(named), std::move(indicator)};
}

}  // namespace protes
