#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace moglow {

using Real = double;

/// Dense row-major array of reals.
///
/// Rank 0 is a scalar, rank 1 a vector (viewed as a 1×n row when a matrix is
/// needed) and rank 2 a matrix. Higher ranks are representable but every
/// arithmetic routine in the library works on the rank ≤ 2 view.
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;

  Tensor() = default;
  Tensor(Shape shape, std::vector<Real> data);

  static Tensor zeros(Shape shape);
  static Tensor zeros(std::size_t rows, std::size_t cols) { return zeros(Shape{rows, cols}); }
  static Tensor filled(Shape shape, Real value);
  static Tensor scalar(Real value) { return Tensor(Shape{}, {value}); }
  static Tensor row(std::vector<Real> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<Real> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<Real>> rows);
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Rows/cols of the matrix view: scalar → 1×1, vector[n] → 1×n.
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  std::span<Real> data() noexcept { return data_; }
  std::span<const Real> data() const noexcept { return data_; }
  Real* ptr() noexcept { return data_.data(); }
  const Real* ptr() const noexcept { return data_.data(); }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }
  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  /// Scalar value; throws DimensionError unless size() == 1.
  Real item() const;

  std::span<Real> row_span(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const Real> row_span(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

  Tensor reshaped(Shape shape) const;
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<Real> data_;
};

std::string shape_string(const Tensor::Shape& shape);
bool same_shape(const Tensor& a, const Tensor& b) noexcept;

/// Row-major C = A·B for raw buffers (A: m×k, B: k×n). C is overwritten.
///
/// Every output element accumulates over k in ascending order, so results
/// are bitwise identical to the textbook triple loop.
void gemm(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n);
/// C += A·B.
void gemm_accumulate(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k,
                     std::size_t n);
/// C += Aᵀ·B with A: k×m, B: k×n, C: m×n.
void gemm_tn_accumulate(const Real* a, const Real* b, Real* c, std::size_t k, std::size_t m,
                        std::size_t n);

Tensor transpose(const Tensor& a);
Tensor matmul(const Tensor& a, const Tensor& b);

}  // namespace moglow
