#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "ipred/geometry.hpp"

namespace ipred {

struct DtwResult {
  double cost = 0.0;  // summed Euclidean local distances along the warp
  std::vector<std::pair<std::size_t, std::size_t>> path;  // (0,0) .. (n-1,m-1)
};

// Classic unconstrained DTW with Euclidean local cost on (x, y) and the
// symmetric step pattern {(1,1), (1,0), (0,1)}. O(nm) time and memory.
// On ties the backtrack prefers the diagonal, then an i-advance, then a
// j-advance.
DtwResult dtw_distance(std::span<const Point2> a, std::span<const Point2> b);

// Cost only; O(min(n, m)) memory. Same value as dtw_distance(a, b).cost.
double dtw_cost(std::span<const Point2> a, std::span<const Point2> b);

}  // namespace ipred
