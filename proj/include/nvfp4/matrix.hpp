#ifndef NVFP4_MATRIX_HPP
#define NVFP4_MATRIX_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace nvfp4 {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  friend constexpr bool operator==(Shape, Shape) = default;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : shape_{rows, cols}, data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return shape_.rows; }
  std::size_t cols() const { return shape_.cols; }
  Shape shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_.cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_.cols + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * shape_.cols, shape_.cols);
  }

  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

enum class Accumulate { kF32, kF64 };

/// a * b^T. With kF32 both operands are rounded to float and products are
/// accumulated in float, as a tensor core would.
Matrix matmul_nt(const Matrix& a, const Matrix& b, Accumulate acc = Accumulate::kF64);

/// Sum of squares of all entries.
double squared_norm(std::span<const double> x);

/// Sum of squared differences. Throws std::invalid_argument on size mismatch.
double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace nvfp4

#endif  // NVFP4_MATRIX_HPP
