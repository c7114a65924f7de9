#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace memspm {

// Row-major dense matrix of 64-bit reals. Training math is all double;
// dataset files narrow to float32 on write and widen back on read.
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const RealMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;
  void fill(double v);

  bool operator==(const RealMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using VecView = std::span<const double>;

// Sums run sequentially in ascending index order so repeated runs are
// bit-identical.
inline double dot(VecView a, VecView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm_sq(VecView a) { return dot(a, a); }

double l2_norm(VecView a);

inline double squared_distance(VecView a, VecView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// a . b / (|a| |b|); throws std::domain_error if either vector has zero norm
double cosine_similarity(VecView a, VecView b);

// max-subtracted, entries positive, sums to 1 within 1e-12
std::vector<double> softmax(VecView v);
void softmax_inplace(std::span<double> v);

}  // namespace memspm
