#include "nvfp4/matrix.hpp"

#include <Eigen/Core>
#include <string>

namespace nvfp4 {
namespace {

template <typename T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : shape_{rows, cols}, data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("Matrix: data size " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

Matrix Matrix::transposed() const {
  Matrix out(cols(), rows());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < cols(); ++c) out(c, r) = (*this)(r, c);
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b, Accumulate acc) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_nt: inner dimensions differ (" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.cols()) + ")");
  }
  Matrix out(a.rows(), b.rows());
  if (out.size() == 0) return out;
  const auto m = static_cast<Eigen::Index>(a.rows());
  const auto n = static_cast<Eigen::Index>(b.rows());
  const auto k = static_cast<Eigen::Index>(a.cols());
  Eigen::Map<const RowMajor<double>> ea(a.data().data(), m, k);
  Eigen::Map<const RowMajor<double>> eb(b.data().data(), n, k);
  Eigen::Map<RowMajor<double>> eo(out.data().data(), m, n);
  if (acc == Accumulate::kF64) {
    eo.noalias() = ea * eb.transpose();
  } else {
    const RowMajor<float> fa = ea.cast<float>();
    const RowMajor<float> fb = eb.cast<float>();
    const RowMajor<float> fo = fa * fb.transpose();
    eo = fo.cast<double>();
  }
  return out;
}

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("squared_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace nvfp4
