#include "learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rng.hpp"

namespace protes {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kSaltInitDistribution = 0x494E4954;
constexpr std::uint64_t kSaltIterationBase = 0x53414D50;

double max_abs(const Eigen::RowVectorXd& v) { return v.cwiseAbs().maxCoeff(); }
double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

void ProtesConfig::validate() const {
  if (samples_per_iter < 1) throw std::invalid_argument("samples_per_iter must be positive");
  if (top_k < 1) throw std::invalid_argument("top_k must be positive");
  if (gd_steps < 1) throw std::invalid_argument("gd_steps must be positive");
  if (rank < 1) throw std::invalid_argument("rank must be positive");
  if (top_k > samples_per_iter)
    throw std::invalid_argument("top_k must not exceed samples_per_iter");
  if (samples_per_iter > budget)
    throw std::invalid_argument("samples_per_iter must not exceed budget");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw std::invalid_argument("adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps must be positive");
}

AdamState::AdamState(const TensorTrain& tt, double b1, double b2, double e)
    : beta1(b1), beta2(b2), eps(e) {
  first_moment.reserve(tt.cores().size());
  second_moment.reserve(tt.cores().size());
  for (const TtCore& core : tt.cores()) {
    first_moment.emplace_back(core.data.size(), 0.0);
    second_moment.emplace_back(core.data.size(), 0.0);
  }
}

double loss(const TensorTrain& tt, std::span<const MultiIndex> selected) {
  if (selected.empty()) throw std::invalid_argument("empty selection");
  double total = 0.0;
  for (const MultiIndex& x : selected) total += tt.log_abs(x);
  return total;
}

CoreGrads loss_gradient(const TensorTrain& tt,
                        std::span<const MultiIndex> selected) {
  if (selected.empty()) throw std::invalid_argument("empty selection");
  const std::int64_t d = tt.ndim();
  const auto& cores = tt.cores();

  CoreGrads grads;
  grads.reserve(cores.size());
  for (const TtCore& core : cores) grads.emplace_back(core.data.size(), 0.0);

  const double log_floor = std::log(TensorTrain::kValueFloor);

  std::vector<Eigen::RowVectorXd> prefix(static_cast<std::size_t>(d));
  std::vector<Eigen::VectorXd> suffix(static_cast<std::size_t>(d));

  for (const MultiIndex& x : selected) {
    // prefix[i]: unit-max-norm product of the chosen slices before core i;
    // suffix[i]: the same after core i. Scales are tracked only to detect a
    // vanishing element -- they cancel in the gradient itself.
    double prefix_log = 0.0;
    prefix[0] = Eigen::RowVectorXd::Ones(1);
    bool vanished = false;
    for (std::int64_t i = 0; i + 1 < d; ++i) {
      Eigen::RowVectorXd next =
          prefix[static_cast<std::size_t>(i)] *
          cores[static_cast<std::size_t>(i)].slice(x[static_cast<std::size_t>(i)]);
      const double m = max_abs(next);
      if (m == 0.0) { vanished = true; break; }
      prefix_log += std::log(m);
      prefix[static_cast<std::size_t>(i) + 1] = next / m;
    }

    double suffix_log = 0.0;
    suffix[static_cast<std::size_t>(d) - 1] = Eigen::VectorXd::Ones(1);
    if (!vanished) {
      for (std::int64_t i = d - 1; i >= 1; --i) {
        Eigen::VectorXd prev =
            cores[static_cast<std::size_t>(i)].slice(x[static_cast<std::size_t>(i)]) *
            suffix[static_cast<std::size_t>(i)];
        const double m = max_abs(prev);
        if (m == 0.0) { vanished = true; break; }
        suffix_log += std::log(m);
        suffix[static_cast<std::size_t>(i) - 1] = prev / m;
      }
    }

    // Element value in the rescaled frame at mode 0 gives the overall log
    // magnitude; reject indices the floor would swallow.
    double scaled_value = 0.0;
    if (!vanished) {
      const Eigen::RowVectorXd mid = prefix[0] * cores[0].slice(x[0]);
      scaled_value = mid.dot(suffix[0]);
      if (scaled_value == 0.0) vanished = true;
    }
    if (vanished ||
        prefix_log + suffix_log + std::log(std::abs(scaled_value)) <= log_floor)
      throw std::runtime_error("vanishing likelihood at selected index");

    for (std::int64_t i = 0; i < d; ++i) {
      const TtCore& core = cores[static_cast<std::size_t>(i)];
      const Eigen::RowVectorXd& left = prefix[static_cast<std::size_t>(i)];
      const Eigen::VectorXd& right = suffix[static_cast<std::size_t>(i)];
      const Eigen::RowVectorXd mid =
          left * core.slice(x[static_cast<std::size_t>(i)]);
      const double scaled_element = mid.dot(right);
      // d log|p| / dG[a, x_i, b] = left[a] * right[b] / p, evaluated in the
      // common rescaled frame where the scale factors cancel.
      std::vector<double>& g = grads[static_cast<std::size_t>(i)];
      const std::int64_t n = x[static_cast<std::size_t>(i)];
      for (Eigen::Index a = 0; a < core.left_rank; ++a)
        for (Eigen::Index b = 0; b < core.right_rank; ++b)
          g[static_cast<std::size_t>((a * core.mode_size + n) * core.right_rank +
                                     b)] += left(a) * right(b) / scaled_element;
    }
  }
  return grads;
}

void adam_step(TensorTrain& tt, const CoreGrads& grads, AdamState& state,
               double learning_rate) {
  auto& cores = tt.mutable_cores();
  if (grads.size() != cores.size())
    throw std::invalid_argument("gradient core count mismatch");
  for (std::size_t i = 0; i < cores.size(); ++i) {
    if (grads[i].size() != cores[i].data.size())
      throw std::invalid_argument("gradient shape mismatch");
    for (double g : grads[i])
      if (!std::isfinite(g)) throw std::invalid_argument("non-finite gradient");
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < cores.size(); ++i) {
    std::vector<double>& data = cores[i].data;
    std::vector<double>& m = state.first_moment[i];
    std::vector<double>& v = state.second_moment[i];
    const std::vector<double>& g = grads[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      // Ascent: the loss is a likelihood to be increased.
      data[j] += learning_rate * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + state.eps);
    }
  }
}

namespace {

// Right interfaces as in TensorTrain::right_interfaces, but keeping the
// max-norm scale factors, which the gradient recurrences need.
struct ScaledInterfaces {
  std::vector<Eigen::VectorXd> z;  // z[j], length ranks[j]; z[d] = [1]
  std::vector<double> scale;       // scale[j] for j = 1..d-1
};

ScaledInterfaces scaled_right_interfaces(const TensorTrain& tt) {
  const std::int64_t d = tt.ndim();
  ScaledInterfaces out;
  out.z.assign(static_cast<std::size_t>(d) + 1, Eigen::VectorXd());
  out.scale.assign(static_cast<std::size_t>(d) + 1, 1.0);
  out.z[static_cast<std::size_t>(d)] = Eigen::VectorXd::Ones(1);
  for (std::int64_t j = d - 1; j >= 1; --j) {
    const TtCore& core = tt.cores()[static_cast<std::size_t>(j)];
    Eigen::VectorXd y = Eigen::VectorXd::Zero(core.left_rank);
    for (Eigen::Index n = 0; n < core.mode_size; ++n)
      y += core.slice(n).cwiseAbs() * out.z[static_cast<std::size_t>(j) + 1];
    const double m = y.cwiseAbs().maxCoeff();
    if (m > 0.0) y /= m;
    out.z[static_cast<std::size_t>(j)] = std::move(y);
    out.scale[static_cast<std::size_t>(j)] = m > 0.0 ? m : 1.0;
  }
  return out;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

double sample_log_prob(const TensorTrain& tt, const MultiIndex& x) {
  const std::int64_t d = tt.ndim();
  const auto& cores = tt.cores();
  const ScaledInterfaces interfaces = scaled_right_interfaces(tt);

  Eigen::RowVectorXd left = Eigen::RowVectorXd::Ones(1);
  double total = 0.0;
  for (std::int64_t i = 0; i < d; ++i) {
    const TtCore& core = cores[static_cast<std::size_t>(i)];
    const Eigen::VectorXd& z = interfaces.z[static_cast<std::size_t>(i) + 1];
    const Eigen::RowVectorXd rows = left * core.unfold();
    double sum = 0.0, chosen = 0.0;
    for (Eigen::Index n = 0; n < core.mode_size; ++n) {
      const double q =
          std::abs(rows.segment(n * core.right_rank, core.right_rank).dot(z));
      sum += q;
      if (n == x[static_cast<std::size_t>(i)]) chosen = q;
    }
    if (!(chosen > 0.0) || !(sum > 0.0))
      throw std::runtime_error("vanishing likelihood at selected index");
    total += std::log(chosen / sum);
    left = rows.segment(x[static_cast<std::size_t>(i)] * core.right_rank,
                        core.right_rank);
    left /= left.cwiseAbs().maxCoeff();
  }
  return total;
}

CoreGrads sample_log_prob_gradient(const TensorTrain& tt,
                                   std::span<const MultiIndex> selected) {
  if (selected.empty()) throw std::invalid_argument("empty selection");
  const std::int64_t d = tt.ndim();
  const auto& cores = tt.cores();
  const ScaledInterfaces interfaces = scaled_right_interfaces(tt);

  CoreGrads grads;
  grads.reserve(cores.size());
  for (const TtCore& core : cores) grads.emplace_back(core.data.size(), 0.0);

  // Per-mode workspaces reused across the selection.
  std::vector<Eigen::RowVectorXd> prefix(static_cast<std::size_t>(d) + 1);
  std::vector<Eigen::RowVectorXd> rows(static_cast<std::size_t>(d));
  std::vector<Eigen::VectorXd> t(static_cast<std::size_t>(d));
  std::vector<double> inv_sum(static_cast<std::size_t>(d));
  std::vector<double> prefix_scale(static_cast<std::size_t>(d));

  for (const MultiIndex& x : selected) {
    // Forward pass: prefixes, candidate rows and conditional weights.
    prefix[0] = Eigen::RowVectorXd::Ones(1);
    for (std::int64_t i = 0; i < d; ++i) {
      const TtCore& core = cores[static_cast<std::size_t>(i)];
      const Eigen::VectorXd& z = interfaces.z[static_cast<std::size_t>(i) + 1];
      rows[static_cast<std::size_t>(i)] =
          prefix[static_cast<std::size_t>(i)] * core.unfold();
      const Eigen::RowVectorXd& row = rows[static_cast<std::size_t>(i)];
      Eigen::VectorXd& ts = t[static_cast<std::size_t>(i)];
      ts.resize(core.mode_size);
      double sum = 0.0;
      for (Eigen::Index n = 0; n < core.mode_size; ++n) {
        ts(n) = row.segment(n * core.right_rank, core.right_rank).dot(z);
        sum += std::abs(ts(n));
      }
      const std::int64_t xi = x[static_cast<std::size_t>(i)];
      if (!(std::abs(ts(xi)) > 0.0) || !(sum > 0.0))
        throw std::runtime_error("vanishing likelihood at selected index");
      inv_sum[static_cast<std::size_t>(i)] = 1.0 / sum;

      Eigen::RowVectorXd next =
          row.segment(xi * core.right_rank, core.right_rank);
      const double m = next.cwiseAbs().maxCoeff();
      prefix_scale[static_cast<std::size_t>(i)] = m;
      prefix[static_cast<std::size_t>(i) + 1] = next / m;
    }

    // Backward adjoint of the prefix chain: mu[k] = d(sum_{i>k} l_i)/dL_k.
    std::vector<Eigen::VectorXd> mu(static_cast<std::size_t>(d));
    mu[static_cast<std::size_t>(d) - 1] = Eigen::VectorXd::Zero(1);
    for (std::int64_t k = d - 2; k >= 0; --k) {
      const std::int64_t i = k + 1;  // the mode whose term couples directly
      const TtCore& core = cores[static_cast<std::size_t>(i)];
      const Eigen::VectorXd& z = interfaces.z[static_cast<std::size_t>(i) + 1];
      const Eigen::VectorXd& ts = t[static_cast<std::size_t>(i)];
      const std::int64_t xi = x[static_cast<std::size_t>(i)];

      Eigen::VectorXd c = Eigen::VectorXd::Zero(core.left_rank);
      for (Eigen::Index n = 0; n < core.mode_size; ++n) {
        const Eigen::VectorXd slice_z = core.slice(n) * z;
        if (n == xi) c += slice_z / ts(xi);
        c -= (sign_of(ts(n)) * inv_sum[static_cast<std::size_t>(i)]) * slice_z;
      }
      mu[static_cast<std::size_t>(k)] =
          c + core.slice(xi) * mu[static_cast<std::size_t>(i)] /
                  prefix_scale[static_cast<std::size_t>(i)];
    }

    // Forward adjoint of the interface chain: rho[k] = d(sum_{i<k} l_i)/dZ_k.
    std::vector<Eigen::VectorXd> rho(static_cast<std::size_t>(d));
    for (std::int64_t k = 1; k < d; ++k) {
      const std::int64_t i = k - 1;
      const TtCore& core = cores[static_cast<std::size_t>(i)];
      const Eigen::RowVectorXd& row = rows[static_cast<std::size_t>(i)];
      const Eigen::VectorXd& ts = t[static_cast<std::size_t>(i)];
      const std::int64_t xi = x[static_cast<std::size_t>(i)];

      Eigen::VectorXd e = Eigen::VectorXd::Zero(core.right_rank);
      for (Eigen::Index n = 0; n < core.mode_size; ++n) {
        const auto seg = row.segment(n * core.right_rank, core.right_rank);
        if (n == xi) e += seg.transpose() / ts(xi);
        e -= (sign_of(ts(n)) * inv_sum[static_cast<std::size_t>(i)]) *
             seg.transpose();
      }
      if (k == 1) {
        rho[1] = std::move(e);
      } else {
        // Z_{k-1} = (sum_n |G_{k-1}(n)|) Z_k / scale.
        const TtCore& prev = cores[static_cast<std::size_t>(k) - 1];
        Eigen::VectorXd carried = Eigen::VectorXd::Zero(prev.right_rank);
        for (Eigen::Index n = 0; n < prev.mode_size; ++n)
          carried += prev.slice(n).cwiseAbs().transpose() *
                     rho[static_cast<std::size_t>(k) - 1];
        rho[static_cast<std::size_t>(k)] =
            e + carried / interfaces.scale[static_cast<std::size_t>(k) - 1];
      }
    }

    // Accumulate. Mode k collects: the direct numerator/denominator terms,
    // the prefix-path term through the chosen slice, and (for k >= 1) the
    // interface-path term spread over every slice.
    for (std::int64_t k = 0; k < d; ++k) {
      const TtCore& core = cores[static_cast<std::size_t>(k)];
      const Eigen::VectorXd& z = interfaces.z[static_cast<std::size_t>(k) + 1];
      const Eigen::VectorXd& ts = t[static_cast<std::size_t>(k)];
      const Eigen::RowVectorXd& left = prefix[static_cast<std::size_t>(k)];
      const std::int64_t xk = x[static_cast<std::size_t>(k)];
      std::vector<double>& g = grads[static_cast<std::size_t>(k)];

      const Eigen::VectorXd chosen_right =
          z / ts(xk) +
          mu[static_cast<std::size_t>(k)] / prefix_scale[static_cast<std::size_t>(k)];
      for (Eigen::Index a = 0; a < core.left_rank; ++a)
        for (Eigen::Index b = 0; b < core.right_rank; ++b)
          g[static_cast<std::size_t>((a * core.mode_size + xk) * core.right_rank +
                                     b)] += left(a) * chosen_right(b);

      for (Eigen::Index n = 0; n < core.mode_size; ++n) {
        const double w = -sign_of(ts(n)) * inv_sum[static_cast<std::size_t>(k)];
        if (w == 0.0) continue;
        for (Eigen::Index a = 0; a < core.left_rank; ++a)
          for (Eigen::Index b = 0; b < core.right_rank; ++b)
            g[static_cast<std::size_t>((a * core.mode_size + n) * core.right_rank +
                                       b)] += w * left(a) * z(b);
      }

      if (k >= 1) {
        const Eigen::VectorXd& r = rho[static_cast<std::size_t>(k)];
        const double inv_scale = 1.0 / interfaces.scale[static_cast<std::size_t>(k)];
        for (Eigen::Index n = 0; n < core.mode_size; ++n)
          for (Eigen::Index a = 0; a < core.left_rank; ++a)
            for (Eigen::Index b = 0; b < core.right_rank; ++b) {
              const std::size_t idx = static_cast<std::size_t>(
                  (a * core.mode_size + n) * core.right_rank + b);
              g[idx] += sign_of(core.data[idx]) * r(a) * z(b) * inv_scale;
            }
      }
    }
  }
  return grads;
}

std::vector<std::int64_t> select_top_k(std::span<const double> values,
                                       std::int64_t k) {
  if (k > static_cast<std::int64_t>(values.size()))
    throw std::invalid_argument("k exceeds the number of values");
  std::vector<std::int64_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    const double va = values[static_cast<std::size_t>(a)];
    const double vb = values[static_cast<std::size_t>(b)];
    if (va != vb) return va < vb;
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

namespace {

// Elementwise product of two tensor trains via per-core Kronecker products;
// private to the loop (used only to mask the sampling distribution).
TensorTrain hadamard_product(const TensorTrain& a, const TensorTrain& b) {
  std::vector<TtCore> cores;
  cores.reserve(a.cores().size());
  for (std::size_t i = 0; i < a.cores().size(); ++i) {
    const TtCore& ca = a.cores()[i];
    const TtCore& cb = b.cores()[i];
    TtCore core(ca.left_rank * cb.left_rank, ca.mode_size,
                ca.right_rank * cb.right_rank);
    for (Eigen::Index aa = 0; aa < ca.left_rank; ++aa)
      for (Eigen::Index ab = 0; ab < cb.left_rank; ++ab)
        for (Eigen::Index n = 0; n < ca.mode_size; ++n)
          for (Eigen::Index ba = 0; ba < ca.right_rank; ++ba)
            for (Eigen::Index bb = 0; bb < cb.right_rank; ++bb)
              core.at(aa * cb.left_rank + ab, n, ba * cb.right_rank + bb) =
                  ca.at(aa, n, ba) * cb.at(ab, n, bb);
    cores.push_back(std::move(core));
  }
  return TensorTrain(std::move(cores));
}

}  // namespace

MinimizeResult protes_minimize(const Problem& problem,
                               const ProtesConfig& config,
                               const TensorTrain* init,
                               const BatchObserver& observer,
                               const TensorTrain* sample_mask) {
  config.validate();
  if (init && init->shape() != problem.shape())
    throw std::invalid_argument("initial distribution shape does not match problem");
  if (sample_mask && sample_mask->shape() != problem.shape())
    throw std::invalid_argument("sampling mask shape does not match problem");

  TensorTrain p = init ? *init
                       : TensorTrain::random(
                             config.rank, problem.shape(),
                             substream(config.seed, kSaltInitDistribution));
  AdamState state(p, config.adam_beta1, config.adam_beta2, config.adam_eps);

  MinimizeResult result{MultiIndex(), kInf, {}, p};
  const std::int64_t iterations = config.budget / config.samples_per_iter;
  result.trace.reserve(static_cast<std::size_t>(iterations));
  const auto start = std::chrono::steady_clock::now();

  for (std::int64_t iter = 1; iter <= iterations; ++iter) {
    const std::uint64_t iter_seed =
        substream(config.seed, kSaltIterationBase + static_cast<std::uint64_t>(iter));
    const SampleBatch batch =
        sample_mask
            ? tt_sample(hadamard_product(p, *sample_mask),
                        config.samples_per_iter, iter_seed)
            : tt_sample(p, config.samples_per_iter, iter_seed);
    const std::vector<double> raw = problem.evaluate(batch.indices);
    if (observer) observer(iter, batch, raw);

    // Non-finite objective values (NaN or the blow-up sentinel) are treated
    // as +infinity: they can never enter the selection or the running best.
    std::vector<double> values(raw.size());
    std::vector<std::int64_t> finite_positions;
    finite_positions.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      values[i] = std::isfinite(raw[i]) ? raw[i] : kInf;
      if (std::isfinite(raw[i]))
        finite_positions.push_back(static_cast<std::int64_t>(i));
    }
    if (finite_positions.empty())
      throw std::runtime_error("no finite objective values");

    std::vector<double> finite_values;
    finite_values.reserve(finite_positions.size());
    for (std::int64_t pos : finite_positions)
      finite_values.push_back(values[static_cast<std::size_t>(pos)]);
    const std::int64_t k_eff = std::min<std::int64_t>(
        config.top_k, static_cast<std::int64_t>(finite_positions.size()));
    std::vector<std::int64_t> selected_positions;
    selected_positions.reserve(static_cast<std::size_t>(k_eff));
    for (std::int64_t s : select_top_k(finite_values, k_eff))
      selected_positions.push_back(finite_positions[static_cast<std::size_t>(s)]);

    // Strict improvement only; top of the selection is the batch minimum at
    // its smallest position.
    const std::int64_t best_pos = selected_positions.front();
    if (values[static_cast<std::size_t>(best_pos)] < result.best_value) {
      result.best_value = values[static_cast<std::size_t>(best_pos)];
      result.best_index = batch.indices[static_cast<std::size_t>(best_pos)];
    }

    std::vector<MultiIndex> selected;
    selected.reserve(selected_positions.size());
    for (std::int64_t pos : selected_positions)
      selected.push_back(batch.indices[static_cast<std::size_t>(pos)]);

    for (std::int64_t g = 0; g < config.gd_steps; ++g) {
      const CoreGrads grads = sample_log_prob_gradient(p, selected);
      adam_step(p, grads, state, config.learning_rate);
    }

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    result.trace.push_back(TraceRecord{iter, iter * config.samples_per_iter,
                                       result.best_value, result.best_index,
                                       elapsed});
  }

  result.distribution = std::move(p);
  return result;
}

}  // namespace protes
