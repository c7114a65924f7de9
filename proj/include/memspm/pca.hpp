#pragma once

#include <vector>

#include "memspm/matrix.hpp"

namespace memspm {

// Top-2 principal axes of the centered covariance. Deterministic sign
// convention: the largest-magnitude component of each axis is positive.
struct Pca2 {
  std::vector<double> mean;
  RealMatrix components;  // 2 x d
  double explained[2] = {0.0, 0.0};
};

Pca2 pca2_fit(const RealMatrix& points);
RealMatrix pca2_project(const Pca2& pca, const RealMatrix& points);  // n x 2

}  // namespace memspm
