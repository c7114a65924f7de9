#pragma once

#include <cstdint>
#include <vector>

#include "memspm/matrix.hpp"

namespace memspm {

struct KmeansResult {
  RealMatrix centers;                   // k x d
  std::vector<std::size_t> assignment;  // per point, nearest center (low-index ties)
  double distortion = 0.0;
  std::size_t iterations = 0;
};

// k-means++ seeding, Lloyd iterations to an assignment fixed point (or 100
// rounds); empty clusters re-seeded from the point farthest from its center.
// Deterministic given the seed.
KmeansResult kmeans(const RealMatrix& points, std::size_t k, std::uint64_t seed);

// mean embedding per present class, ascending class id; classes_out lists the
// class ids row-by-row. Rows with negative labels are ignored.
RealMatrix class_centers(const RealMatrix& zhat, const std::vector<std::int32_t>& labels,
                         std::vector<std::int32_t>& classes_out);

}  // namespace memspm
