#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "learner.hpp"
#include "rng.hpp"
#include "support/oracles.hpp"
#include "support/planted.hpp"
#include "trace_io.hpp"

using protes::AdamState;
using protes::CoreGrads;
using protes::MultiIndex;
using protes::Problem;
using protes::ProtesConfig;
using protes::TensorTrain;
using protes::TtCore;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TensorTrain constant_tt(const std::vector<std::int64_t>& shape, double fill) {
  std::vector<TtCore> cores;
  for (std::size_t i = 0; i < shape.size(); ++i)
    cores.emplace_back(1, shape[i], 1, fill);
  return TensorTrain(std::move(cores));
}

double total_gradient_mass(const CoreGrads& grads) {
  double s = 0.0;
  for (const auto& g : grads)
    for (double v : g) s += std::abs(v);
  return s;
}

}  // namespace

TEST_CASE("loss of the all-ones train is zero") {
  const TensorTrain tt = constant_tt({3, 3, 3}, 1.0);
  const std::vector<MultiIndex> sel{{0, 0, 0}, {1, 1, 1}, {2, 0, 1},
                                    {0, 2, 2}, {1, 0, 2}};
  CHECK(protes::loss(tt, sel) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("loss closed form for constant-2 cores") {
  const TensorTrain tt = constant_tt({2, 2, 2}, 2.0);
  const std::vector<MultiIndex> sel{{0, 1, 0}, {1, 1, 1}};
  CHECK(protes::loss(tt, sel) ==
        doctest::Approx(2.0 * 3.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("loss sums per-index log values") {
  const TensorTrain tt = TensorTrain::random(3, {3, 4, 2, 3}, 8);
  protes::SplitMix64 rng(7);
  std::vector<MultiIndex> sel;
  for (int i = 0; i < 10; ++i) {
    MultiIndex x;
    for (std::int64_t n : tt.shape())
      x.push_back(static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(n))));
    sel.push_back(std::move(x));
  }
  double expected = 0.0;
  for (const MultiIndex& x : sel) expected += tt.log_abs(x);
  CHECK(protes::loss(tt, sel) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(protes::loss(tt, {}), std::invalid_argument);
}

TEST_CASE("gradient of a single-mode train is 1/value at the chosen entry") {
  std::vector<TtCore> cores;
  cores.emplace_back(1, 4, 1, 0.0);
  for (Eigen::Index n = 0; n < 4; ++n) cores[0].at(0, n, 0) = 0.5 + 0.25 * n;
  const TensorTrain tt{std::move(cores)};
  const std::vector<MultiIndex> sel{{2}};
  const CoreGrads grads = protes::loss_gradient(tt, sel);
  for (Eigen::Index n = 0; n < 4; ++n) {
    const double expected = (n == 2) ? 1.0 / tt.cores()[0].at(0, 2, 0) : 0.0;
    CHECK(grads[0][static_cast<std::size_t>(n)] ==
          doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("gradient of the all-ones train is an indicator of the chosen slices") {
  const TensorTrain tt = constant_tt({2, 2, 2}, 1.0);
  const std::vector<MultiIndex> sel{{1, 0, 1}};
  const CoreGrads grads = protes::loss_gradient(tt, sel);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < grads[i].size(); ++j) {
      const double expected = (j == static_cast<std::size_t>(sel[0][i])) ? 1.0 : 0.0;
      CHECK(grads[i][j] == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("gradient matches central finite differences") {
  protes::SplitMix64 rng(4321);
  for (int trial = 0; trial < 8; ++trial) {
    const std::int64_t d = 2 + static_cast<std::int64_t>(rng.next_below(3));
    std::vector<std::int64_t> shape;
    for (std::int64_t i = 0; i < d; ++i)
      shape.push_back(2 + static_cast<std::int64_t>(rng.next_below(3)));
    const std::int64_t rank = 1 + static_cast<std::int64_t>(rng.next_below(3));
    TensorTrain tt = TensorTrain::random(rank, shape, rng.next_u64());

    std::vector<MultiIndex> sel;
    for (int s = 0; s < 3; ++s) {
      MultiIndex x;
      for (std::int64_t n : shape)
        x.push_back(static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(n))));
      sel.push_back(std::move(x));
    }

    const CoreGrads grads = protes::loss_gradient(tt, sel);
    const double step = 1e-6;
    for (std::size_t c = 0; c < tt.cores().size(); ++c)
      for (std::size_t j = 0; j < tt.cores()[c].data.size(); ++j) {
        const double saved = tt.cores()[c].data[j];
        tt.mutable_cores()[c].data[j] = saved + step;
        const double up = protes::loss(tt, sel);
        tt.mutable_cores()[c].data[j] = saved - step;
        const double down = protes::loss(tt, sel);
        tt.mutable_cores()[c].data[j] = saved;
        const double fd = (up - down) / (2.0 * step);
        const double got = grads[c][j];
        const double scale = std::max({1.0, std::abs(fd), std::abs(got)});
        CHECK(std::abs(got - fd) / scale < 1e-5);
      }
  }
}

TEST_CASE("gradient rejects a vanishing selected element") {
  TensorTrain tt = constant_tt({2, 2}, 1.0);
  tt.mutable_cores()[0].at(0, 0, 0) = 0.0;
  CHECK_THROWS_WITH_AS(
      protes::loss_gradient(tt, std::vector<MultiIndex>{{0, 0}}),
      "vanishing likelihood at selected index", std::runtime_error);
}

TEST_CASE("adam step with zero gradient only advances the counter") {
  TensorTrain tt = TensorTrain::random(2, {3, 3}, 5);
  const TensorTrain before = tt;
  AdamState state(tt);
  CoreGrads zeros;
  for (const TtCore& c : tt.cores()) zeros.emplace_back(c.data.size(), 0.0);
  protes::adam_step(tt, zeros, state, 0.05);
  CHECK(state.step == 1);
  for (std::size_t c = 0; c < tt.cores().size(); ++c)
    CHECK(tt.cores()[c].data == before.cores()[c].data);
}

TEST_CASE("first adam step moves every entry by almost the learning rate") {
  TensorTrain tt = constant_tt({2, 2}, 1.0);
  AdamState state(tt);
  CoreGrads ones;
  for (const TtCore& c : tt.cores()) ones.emplace_back(c.data.size(), 1.0);
  protes::adam_step(tt, ones, state, 0.05);
  for (const TtCore& c : tt.cores())
    for (double v : c.data)
      CHECK(v == doctest::Approx(1.0 + 0.05 / (1.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("two adam steps match the hand-unrolled recurrence") {
  // Single-entry core, gradients g1 = 0.3, g2 = -0.2, lr = 0.1.
  std::vector<TtCore> cores;
  cores.emplace_back(1, 1, 1, 2.0);
  TensorTrain tt{std::move(cores)};
  AdamState state(tt);

  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double w = 2.0, m = 0.0, v = 0.0;
  const double gs[2] = {0.3, -0.2};
  for (int t = 1; t <= 2; ++t) {
    const double g = gs[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    w += lr * mhat / (std::sqrt(vhat) + eps);

    protes::adam_step(tt, CoreGrads{{g}}, state, lr);
    CHECK(tt.cores()[0].data[0] == doctest::Approx(w).epsilon(1e-12));
  }
  CHECK(state.step == 2);
}

TEST_CASE("adam rejects non-finite gradients") {
  TensorTrain tt = constant_tt({2}, 1.0);
  AdamState state(tt);
  CHECK_THROWS_WITH_AS(
      protes::adam_step(tt, CoreGrads{{std::nan("")}}, state, 0.05),
      "non-finite gradient", std::invalid_argument);
}

TEST_CASE("select_top_k basics") {
  CHECK(protes::select_top_k(std::vector<double>{3, 1, 2}, 1) ==
        std::vector<std::int64_t>{1});
  CHECK(protes::select_top_k(std::vector<double>{5, 5, 5, 5}, 2) ==
        std::vector<std::int64_t>{0, 1});
  CHECK_THROWS_AS(protes::select_top_k(std::vector<double>{1.0}, 2),
                  std::invalid_argument);
}

TEST_CASE("select_top_k equals the sort oracle") {
  protes::SplitMix64 rng(31337);
  std::vector<double> values(100);
  for (double& v : values) v = rng.next_unit();
  values[17] = values[3];  // force a tie
  const auto got = protes::select_top_k(values, 10);

  std::vector<std::int64_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::int64_t>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int64_t a, std::int64_t b) {
                     return values[static_cast<std::size_t>(a)] <
                            values[static_cast<std::size_t>(b)];
                   });
  order.resize(10);
  CHECK(got == order);
}

TEST_CASE("one small-rate adam step on a fixed selection increases the loss") {
  protes::SplitMix64 rng(2718);
  for (int trial = 0; trial < 10; ++trial) {
    TensorTrain tt = TensorTrain::random(3, {3, 3, 3}, rng.next_u64());
    std::vector<MultiIndex> sel;
    for (int s = 0; s < 4; ++s)
      sel.push_back({static_cast<std::int64_t>(rng.next_below(3)),
                     static_cast<std::int64_t>(rng.next_below(3)),
                     static_cast<std::int64_t>(rng.next_below(3))});
    const double before = protes::loss(tt, sel);
    AdamState state(tt);
    protes::adam_step(tt, protes::loss_gradient(tt, sel), state, 1e-4);
    CHECK(protes::loss(tt, sel) > before - 1e-12);
  }
}

TEST_CASE("minimize finds the minimum of the identity objective") {
  const std::vector<std::int64_t> shape{8};
  const Problem problem(
      "identity", shape,
      [](const MultiIndex& x) { return static_cast<double>(x[0]); },
      nlohmann::json{});
  ProtesConfig config;
  config.budget = 1000;
  config.samples_per_iter = 50;
  config.top_k = 5;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    config.seed = seed;
    const auto result = protes::protes_minimize(problem, config);
    if (result.best_value == 0.0) ++hits;
  }
  CHECK(hits >= 9);
}

TEST_CASE("minimize respects the budget exactly and keeps the trace monotone") {
  const Problem problem = testsupport::planted_problem({4, 4, 4, 4, 4, 4}, 77);
  ProtesConfig config;
  config.budget = 2050;  // not a multiple of K: floor(2050/100) = 20 iters
  config.seed = 3;

  std::int64_t observed_evals = 0;
  double running_min = kInf;
  std::vector<double> batch_minima;
  const auto observer = [&](std::int64_t, const protes::SampleBatch& batch,
                            std::span<const double> values) {
    observed_evals += static_cast<std::int64_t>(batch.indices.size());
    for (double v : values) running_min = std::min(running_min, v);
    batch_minima.push_back(running_min);
  };
  const auto result = protes::protes_minimize(problem, config, nullptr, observer);

  CHECK(observed_evals == 2000);
  REQUIRE(result.trace.size() == 20);
  double prev = kInf;
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    const auto& rec = result.trace[i];
    CHECK(rec.evals_used == static_cast<std::int64_t>(i + 1) * 100);
    CHECK(rec.best_value <= prev);
    prev = rec.best_value;
    // The recorded best equals the minimum over every evaluation so far.
    CHECK(rec.best_value == batch_minima[i]);
  }
  CHECK(result.best_value == result.trace.back().best_value);
}

TEST_CASE("minimize is deterministic bit for bit") {
  const Problem problem = testsupport::planted_problem({4, 4, 4, 4}, 11);
  ProtesConfig config;
  config.budget = 1000;
  config.seed = 5;
  const auto a = protes::protes_minimize(problem, config);
  const auto b = protes::protes_minimize(problem, config);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].best_value == b.trace[i].best_value);
    CHECK(a.trace[i].best_index == b.trace[i].best_index);
  }
  CHECK(a.best_index == b.best_index);
  CHECK(protes::trace_to_jsonl(a.trace, false) ==
        protes::trace_to_jsonl(b.trace, false));
}

TEST_CASE("non-finite objective values are never selected and never best") {
  // f is NaN on half the space (first coordinate 0) and positive otherwise;
  // the planted optimum inside the finite half must still be found.
  const std::vector<std::int64_t> shape{2, 4, 4};
  const Problem problem(
      "half_nan", shape,
      [](const MultiIndex& x) {
        if (x[0] == 0) return std::nan("");
        return 1.0 + static_cast<double>(x[1]) + 4.0 * static_cast<double>(x[2]);
      },
      nlohmann::json{});
  ProtesConfig config;
  config.budget = 2000;
  config.seed = 1;
  const auto result = protes::protes_minimize(problem, config);
  CHECK(std::isfinite(result.best_value));
  CHECK(result.best_value == 1.0);
  CHECK(result.best_index == MultiIndex{1, 0, 0});
}

TEST_CASE("an all-NaN batch aborts the run") {
  const Problem problem(
      "always_nan", {4, 4},
      [](const MultiIndex&) { return std::nan(""); }, nlohmann::json{});
  ProtesConfig config;
  config.budget = 200;
  CHECK_THROWS_WITH_AS(protes::protes_minimize(problem, config),
                       "no finite objective values", std::runtime_error);
}

TEST_CASE("config invariants are enforced") {
  const Problem problem = testsupport::planted_problem({4, 4}, 0);
  ProtesConfig config;
  config.top_k = 200;  // > samples_per_iter
  CHECK_THROWS_AS(protes::protes_minimize(problem, config), std::invalid_argument);
  config = ProtesConfig{};
  config.budget = 50;  // < samples_per_iter
  CHECK_THROWS_AS(protes::protes_minimize(problem, config), std::invalid_argument);
  config = ProtesConfig{};
  config.learning_rate = -1.0;
  CHECK_THROWS_AS(protes::protes_minimize(problem, config), std::invalid_argument);
}

TEST_CASE("a mismatched initial distribution is rejected") {
  const Problem problem = testsupport::planted_problem({4, 4}, 0);
  const TensorTrain wrong = TensorTrain::random(2, {4, 3}, 0);
  ProtesConfig config;
  config.budget = 200;
  CHECK_THROWS_AS(protes::protes_minimize(problem, config, &wrong),
                  std::invalid_argument);
}

TEST_CASE("the trained distribution concentrates on the planted optimum") {
  const std::vector<std::int64_t> shape{4, 4, 4, 4, 4, 4};
  const std::uint64_t seed = 4242;
  const Problem problem = testsupport::planted_problem(shape, seed);
  const MultiIndex star = testsupport::planted_optimum(shape, seed);

  ProtesConfig config;
  config.budget = 10000;
  config.seed = 0;
  const auto result = protes::protes_minimize(problem, config);
  CHECK(result.best_value == 0.0);
  CHECK(result.best_index == star);

  const auto fresh = protes::tt_sample(result.distribution, 1000, 987);
  std::int64_t at_star = 0;
  for (const MultiIndex& x : fresh.indices)
    if (x == star) ++at_star;
  CHECK(at_star > 500);
}

TEST_CASE("trace jsonl lines carry the expected fields") {
  const Problem problem = testsupport::planted_problem({4, 4}, 5);
  ProtesConfig config;
  config.budget = 300;
  const auto result = protes::protes_minimize(problem, config);
  const std::string text = protes::trace_to_jsonl(result.trace, true);
  std::size_t lines = 0;
  for (char ch : text) lines += ch == '\n';
  CHECK(lines == result.trace.size());
  const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  CHECK(first.at("iter") == 1);
  CHECK(first.at("evals") == 100);
  CHECK(first.contains("best_y"));
  CHECK(first.at("best_x").size() == 2);
  CHECK(first.contains("t_s"));

  const std::string untimed = protes::trace_to_jsonl(result.trace, false);
  const auto first_untimed = nlohmann::json::parse(untimed.substr(0, untimed.find('\n')));
  CHECK(first_untimed.at("t_s") == 0.0);
}
