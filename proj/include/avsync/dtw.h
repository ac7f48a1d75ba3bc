#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace avsync {

using WarpPath = std::vector<std::pair<std::size_t, std::size_t>>;

struct DtwResult {
  double cost = 0.0;
  WarpPath path;  // (0, 0) ... (n-1, m-1), steps (1,0), (0,1) or (1,1)
};

inline double local_cost(double p, double q) { return p > q ? p - q : q - p; }

/// Full-table DTW: D(i,j) = |x_i - y_j| + min(D(i-1,j-1), D(i-1,j), D(i,j-1)),
/// cost = D(n-1, m-1). Backtracking prefers diagonal, then vertical (i-1),
/// then horizontal (j-1). Throws std::invalid_argument on empty input.
DtwResult dtw_exact(std::span<const double> x, std::span<const double> y);

inline constexpr std::size_t kDefaultFastDtwRadius = 10;

/// Multiresolution FastDTW: halve both series by pairwise averaging, solve
/// recursively, project the coarse path and refine inside a window widened
/// by `radius`. Inputs with either length <= radius + 2 are solved exactly.
DtwResult dtw_fast(std::span<const double> x, std::span<const double> y,
                   std::size_t radius = kDefaultFastDtwRadius);

}  // namespace avsync
