#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace declension {

/// Dense row-major matrix of doubles. Vectors are rows x 1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Tensor vector(std::size_t n, double fill = 0.0) { return Tensor(n, 1, fill); }
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor column(std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void fill(double v);
  bool all_finite() const noexcept;
  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// SplitMix64 generator. One stream per consumer; not thread-safe.
class Prng {
 public:
  explicit Prng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 bits of resolution.
  double next_double() noexcept;
  /// Uniform in [lo, hi].
  double uniform(double lo, double hi) noexcept;
  /// Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// In-place Fisher-Yates shuffle driven by `prng`.
template <typename T>
void shuffle(std::vector<T>& items, Prng& prng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(prng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

Tensor matvec(const Tensor& m, const Tensor& v);
/// out = m * v over a raw span; `out` must have m.rows() entries.
void matvec_into(const Tensor& m, std::span<const double> v, std::span<double> out);

Tensor softmax(const Tensor& logits);
void softmax_inplace(std::span<double> logits);

inline constexpr double kProbabilityFloor = 1e-12;
double cross_entropy(const Tensor& probs, std::size_t target);
double cross_entropy(std::span<const double> probs, std::size_t target);

/// Entries i.i.d. uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], drawn row-major.
Tensor init_uniform(Prng& prng, std::size_t rows, std::size_t cols, std::size_t fan_in);

using ScalarFunction = std::function<double(const Tensor&)>;
/// Central-difference gradient of `f` at `params`.
Tensor finite_diff_grad(const ScalarFunction& f, const Tensor& params, double eps = 1e-5);

double sigmoid(double x) noexcept;

}  // namespace declension
