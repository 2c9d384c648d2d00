#include "tensor_train.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rng.hpp"

namespace protes {

namespace {

constexpr std::uint64_t kSaltRandomCores = 0x54545244;  // tt_random stream

std::string mode_message(const char* what, std::int64_t mode) {
  return std::string(what) + " at mode " + std::to_string(mode);
}

}  // namespace

TensorTrain::TensorTrain(std::vector<TtCore> cores) : cores_(std::move(cores)) {
  if (cores_.empty()) throw std::invalid_argument("empty core list");
  if (cores_.front().left_rank != 1 || cores_.back().right_rank != 1)
    throw std::invalid_argument("boundary ranks must be 1");
  shape_.reserve(cores_.size());
  ranks_.reserve(cores_.size() + 1);
  ranks_.push_back(cores_.front().left_rank);
  for (std::size_t i = 0; i < cores_.size(); ++i) {
    const TtCore& c = cores_[i];
    if (c.left_rank < 1 || c.mode_size < 1 || c.right_rank < 1)
      throw std::invalid_argument("core dimensions must be positive");
    if (c.left_rank != ranks_.back())
      throw std::invalid_argument(mode_message("rank mismatch", static_cast<std::int64_t>(i)));
    if (c.data.size() !=
        static_cast<std::size_t>(c.left_rank * c.mode_size * c.right_rank))
      throw std::invalid_argument(mode_message("core storage size mismatch",
                                               static_cast<std::int64_t>(i)));
    for (double v : c.data)
      if (!std::isfinite(v))
        throw std::invalid_argument(mode_message("non-finite core entry",
                                                 static_cast<std::int64_t>(i)));
    shape_.push_back(c.mode_size);
    ranks_.push_back(c.right_rank);
  }
}

TensorTrain TensorTrain::random(std::int64_t rank,
                                const std::vector<std::int64_t>& shape,
                                std::uint64_t seed) {
  if (shape.empty()) throw std::invalid_argument("empty shape");
  if (rank < 1) throw std::invalid_argument("zero rank");
  for (std::int64_t n : shape)
    if (n < 1) throw std::invalid_argument("mode sizes must be positive");

  SplitMix64 rng(substream(seed, kSaltRandomCores));
  const std::int64_t d = static_cast<std::int64_t>(shape.size());
  std::vector<TtCore> cores;
  cores.reserve(static_cast<std::size_t>(d));
  for (std::int64_t i = 0; i < d; ++i) {
    const Eigen::Index l = (i == 0) ? 1 : rank;
    const Eigen::Index r = (i == d - 1) ? 1 : rank;
    TtCore core(l, shape[static_cast<std::size_t>(i)], r);
    for (double& v : core.data) v = rng.next_unit();
    cores.push_back(std::move(core));
  }
  return TensorTrain(std::move(cores));
}

void TensorTrain::check_index(const MultiIndex& x) const {
  if (static_cast<std::int64_t>(x.size()) != ndim())
    throw std::invalid_argument("index length does not match tensor dimension");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < 0 || x[i] >= shape_[i])
      throw std::invalid_argument(
          mode_message("index out of bounds", static_cast<std::int64_t>(i)));
}

double TensorTrain::eval(const MultiIndex& x) const {
  check_index(x);
  Eigen::RowVectorXd v = cores_[0].slice(x[0]);
  for (std::size_t i = 1; i < cores_.size(); ++i)
    v = v * cores_[i].slice(x[i]);
  return v(0);
}

double TensorTrain::log_abs(const MultiIndex& x) const {
  check_index(x);
  const double log_floor = std::log(kValueFloor);

  Eigen::RowVectorXd v = cores_[0].slice(x[0]);
  double log_scale = 0.0;
  for (std::size_t i = 0;; ++i) {
    const double m = v.cwiseAbs().maxCoeff();
    if (m == 0.0) return log_floor;  // product is exactly zero
    log_scale += std::log(m);
    if (i + 1 == cores_.size()) break;
    v /= m;
    v = v * cores_[i + 1].slice(x[i + 1]);
  }
  // log_scale == log|value|; fold in the floor as an exact log-sum-exp so
  // the result equals log(|value| + kValueFloor) without ever forming it.
  const double hi = std::max(log_scale, log_floor);
  const double lo = std::min(log_scale, log_floor);
  return hi + std::log1p(std::exp(lo - hi));
}

std::vector<Eigen::VectorXd> TensorTrain::right_interfaces() const {
  const std::int64_t d = ndim();
  std::vector<Eigen::VectorXd> suffix(static_cast<std::size_t>(d) + 1);
  suffix[static_cast<std::size_t>(d)] = Eigen::VectorXd::Ones(1);
  for (std::int64_t i = d - 1; i >= 1; --i) {
    const TtCore& core = cores_[static_cast<std::size_t>(i)];
    const Eigen::VectorXd& next = suffix[static_cast<std::size_t>(i) + 1];
    Eigen::VectorXd v = Eigen::VectorXd::Zero(core.left_rank);
    for (Eigen::Index n = 0; n < core.mode_size; ++n)
      v += core.slice(n).cwiseAbs() * next;
    const double m = v.cwiseAbs().maxCoeff();
    if (m > 0.0) v /= m;
    suffix[static_cast<std::size_t>(i)] = std::move(v);
  }
  return suffix;
}

std::string TensorTrain::to_json() const {
  nlohmann::json doc;
  doc["shape"] = shape_;
  doc["ranks"] = ranks_;
  nlohmann::json cores = nlohmann::json::array();
  for (const TtCore& c : cores_) cores.push_back(c.data);
  doc["cores"] = std::move(cores);
  return doc.dump();
}

TensorTrain TensorTrain::from_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  const auto shape = doc.at("shape").get<std::vector<std::int64_t>>();
  const auto ranks = doc.at("ranks").get<std::vector<std::int64_t>>();
  const auto& flat = doc.at("cores");
  if (shape.empty() || ranks.size() != shape.size() + 1 ||
      flat.size() != shape.size())
    throw std::invalid_argument("inconsistent tensor-train document");
  std::vector<TtCore> cores;
  cores.reserve(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) {
    TtCore core(ranks[i], shape[i], ranks[i + 1]);
    core.data = flat[i].get<std::vector<double>>();
    cores.push_back(std::move(core));
  }
  return TensorTrain(std::move(cores));
}

}  // namespace protes
