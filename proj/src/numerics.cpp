#include "declension/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "declension/error.hpp"

namespace declension {

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (data.size() != rows * cols) {
    throw Error("tensor data length " + std::to_string(data.size()) + " does not match " +
                std::to_string(rows) + "x" + std::to_string(cols));
  }
  Tensor t;
  t.rows_ = rows;
  t.cols_ = cols;
  t.data_ = std::move(data);
  return t;
}

Tensor Tensor::column(std::vector<double> data) {
  const std::size_t n = data.size();
  return from(n, 1, std::move(data));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string Tensor::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

std::uint64_t Prng::next_u64() noexcept {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Prng::next_double() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Prng::uniform(double lo, double hi) noexcept { return lo + (hi - lo) * next_double(); }

std::uint64_t Prng::below(std::uint64_t bound) noexcept {
  // Rejection keeps the draw unbiased; threshold = 2^64 mod bound.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

void matvec_into(const Tensor& m, std::span<const double> v, std::span<double> out) {
  const std::size_t cols = m.cols();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.values().data() + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
}

Tensor matvec(const Tensor& m, const Tensor& v) {
  if (v.cols() != 1 || m.cols() != v.rows()) {
    throw Error("matvec shape mismatch: matrix " + m.shape_string() + " vs vector " + v.shape_string());
  }
  Tensor out = Tensor::vector(m.rows());
  matvec_into(m, v.values(), out.values());
  return out;
}

void softmax_inplace(std::span<double> logits) {
  if (logits.empty()) throw Error("softmax of an empty vector");
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& x : logits) {
    x = std::exp(x - peak);
    total += x;
  }
  for (double& x : logits) x /= total;
}

Tensor softmax(const Tensor& logits) {
  Tensor out = logits;
  softmax_inplace(out.values());
  return out;
}

double cross_entropy(std::span<const double> probs, std::size_t target) {
  if (target >= probs.size()) {
    throw Error("cross_entropy target " + std::to_string(target) + " out of range for " +
                std::to_string(probs.size()) + " classes");
  }
  return -std::log(std::max(probs[target], kProbabilityFloor));
}

double cross_entropy(const Tensor& probs, std::size_t target) {
  return cross_entropy(probs.values(), target);
}

Tensor init_uniform(Prng& prng, std::size_t rows, std::size_t cols, std::size_t fan_in) {
  if (fan_in == 0) throw Error("init_uniform requires fan_in >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(rows, cols);
  for (double& x : t.values()) x = prng.uniform(-bound, bound);
  return t;
}

Tensor finite_diff_grad(const ScalarFunction& f, const Tensor& params, double eps) {
  if (!(eps > 0.0)) throw Error("finite_diff_grad requires eps > 0");
  Tensor probe = params;
  Tensor grad(params.rows(), params.cols());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + eps;
    const double up = f(probe);
    probe[i] = original - eps;
    const double down = f(probe);
    probe[i] = original;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace declension
