#include "ipred/dtw.hpp"

#include <algorithm>
#include <limits>

#include "ipred/error.hpp"

namespace ipred {

DtwResult dtw_distance(std::span<const Point2> a, std::span<const Point2> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("dtw_distance: empty sequence");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  // acc(i, j): minimal cost of aligning a[0..i] with b[0..j].
  std::vector<double> acc(n * m);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return acc[i * m + j]; };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double local = distance(a[i], b[j]);
      if (i == 0 && j == 0) {
        at(i, j) = local;
      } else if (i == 0) {
        at(i, j) = local + at(i, j - 1);
      } else if (j == 0) {
        at(i, j) = local + at(i - 1, j);
      } else {
        at(i, j) = local + std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
      }
    }
  }

  DtwResult result;
  result.cost = at(n - 1, m - 1);

  // Backtrack from the end; predecessors are the cells the forward pass
  // minimised over.
  std::size_t i = n - 1;
  std::size_t j = m - 1;
  result.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = at(i - 1, j - 1);
      const double up = at(i - 1, j);
      const double left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    result.path.emplace_back(i, j);
  }
  std::reverse(result.path.begin(), result.path.end());
  return result;
}

double dtw_cost(std::span<const Point2> a, std::span<const Point2> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("dtw_cost: empty sequence");
  if (b.size() > a.size()) std::swap(a, b);
  const std::size_t m = b.size();
  std::vector<double> prev(m), cur(m);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double local = distance(a[i], b[j]);
      if (i == 0 && j == 0) {
        cur[j] = local;
      } else if (i == 0) {
        cur[j] = local + cur[j - 1];
      } else if (j == 0) {
        cur[j] = local + prev[j];
      } else {
        cur[j] = local + std::min({prev[j - 1], prev[j], cur[j - 1]});
      }
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

}  // namespace ipred
