#include "avsync/dtw.h"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace avsync {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Inclusive column range [lo, hi] allowed in each row.
struct Window {
  std::vector<std::size_t> lo;
  std::vector<std::size_t> hi;
};

Window full_window(std::size_t n, std::size_t m) {
  return {std::vector<std::size_t>(n, 0), std::vector<std::size_t>(n, m - 1)};
}

DtwResult windowed_dtw(std::span<const double> x, std::span<const double> y, const Window& w) {
  const std::size_t n = x.size();
  std::vector<std::size_t> offset(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offset[i + 1] = offset[i] + (w.hi[i] - w.lo[i] + 1);
  std::vector<double> d(offset[n], kInf);

  auto at = [&](std::size_t i, std::size_t j) -> double {
    if (j < w.lo[i] || j > w.hi[i]) return kInf;
    return d[offset[i] + (j - w.lo[i])];
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = w.lo[i]; j <= w.hi[i]; ++j) {
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kInf;
        if (i > 0 && j > 0) best = std::min(best, at(i - 1, j - 1));
        if (i > 0) best = std::min(best, at(i - 1, j));
        if (j > 0) best = std::min(best, at(i, j - 1));
      }
      d[offset[i] + (j - w.lo[i])] = best + local_cost(x[i], y[j]);
    }
  }

  DtwResult res;
  res.cost = at(n - 1, y.size() - 1);
  std::size_t i = n - 1;
  std::size_t j = y.size() - 1;
  res.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    const double diag = (i > 0 && j > 0) ? at(i - 1, j - 1) : kInf;
    const double up = i > 0 ? at(i - 1, j) : kInf;
    const double left = j > 0 ? at(i, j - 1) : kInf;
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
    res.path.emplace_back(i, j);
  }
  std::reverse(res.path.begin(), res.path.end());
  return res;
}

std::vector<double> halve(std::span<const double> x) {
  std::vector<double> out((x.size() + 1) / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 2 * i + 1 < x.size() ? 0.5 * (x[2 * i] + x[2 * i + 1]) : x[2 * i];
  }
  return out;
}

// Widen the coarse path by `radius` cells in every direction, then map each
// coarse cell onto its 2x2 block at the finer resolution.
Window project_window(const WarpPath& coarse, std::size_t coarse_n, std::size_t coarse_m,
                      std::size_t n, std::size_t m, std::size_t radius) {
  std::vector<std::size_t> plo(coarse_n, coarse_m);
  std::vector<std::size_t> phi(coarse_n, 0);
  for (const auto& [ci, cj] : coarse) {
    plo[ci] = std::min(plo[ci], cj);
    phi[ci] = std::max(phi[ci], cj);
  }

  Window w{std::vector<std::size_t>(n, m), std::vector<std::size_t>(n, 0)};
  for (std::size_t ci = 0; ci < coarse_n; ++ci) {
    const std::size_t from = ci >= radius ? ci - radius : 0;
    const std::size_t to = std::min(coarse_n - 1, ci + radius);
    std::size_t lo = coarse_m;
    std::size_t hi = 0;
    for (std::size_t k = from; k <= to; ++k) {
      if (plo[k] > phi[k]) continue;
      lo = std::min(lo, plo[k]);
      hi = std::max(hi, phi[k]);
    }
    if (lo > hi) continue;
    lo = lo >= radius ? lo - radius : 0;
    hi = std::min(coarse_m - 1, hi + radius);
    for (std::size_t fi = 2 * ci; fi <= std::min(n - 1, 2 * ci + 1); ++fi) {
      w.lo[fi] = std::min(w.lo[fi], 2 * lo);
      w.hi[fi] = std::max(w.hi[fi], std::min(m - 1, 2 * hi + 1));
    }
  }

  // Keep the corridor connected from (0, 0) to (n-1, m-1).
  w.lo[0] = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (w.lo[i] > w.hi[i]) {
      w.lo[i] = i > 0 ? w.lo[i - 1] : 0;
      w.hi[i] = i > 0 ? w.hi[i - 1] : 0;
    }
    if (i > 0) {
      w.lo[i] = std::min(w.lo[i], w.hi[i - 1]);
      w.hi[i] = std::max(w.hi[i], w.lo[i - 1]);
    }
  }
  w.hi[n - 1] = m - 1;
  return w;
}

}  // namespace

DtwResult dtw_exact(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw std::invalid_argument("dtw: sequences must be nonempty");
  return windowed_dtw(x, y, full_window(x.size(), y.size()));
}

DtwResult dtw_fast(std::span<const double> x, std::span<const double> y, std::size_t radius) {
  if (x.empty() || y.empty()) throw std::invalid_argument("dtw: sequences must be nonempty");
  const std::size_t min_size = radius + 2;
  if (x.size() <= min_size || y.size() <= min_size) return dtw_exact(x, y);

  const auto cx = halve(x);
  const auto cy = halve(y);
  const auto coarse = dtw_fast(cx, cy, radius);
  const auto window = project_window(coarse.path, cx.size(), cy.size(), x.size(), y.size(), radius);
  return windowed_dtw(x, y, window);
}

}  // namespace avsync
