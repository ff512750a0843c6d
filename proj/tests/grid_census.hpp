#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace testing {

struct GridCensus {
  int minima = 0;
  int saddles = 0;
  int maxima = 0;
};

/// Brute-force critical point count for a 2D function from its values on a dense N x N
/// lattice over [lo, hi]^2. Nodes whose central-difference gradient norm is the strict
/// minimum of their 3x3 neighbourhood (ties to the lower index) and below `grad_tol`
/// count as critical; they are classified by the finite-difference Hessian. Only the
/// sampled values are used, never analytic derivatives.
inline GridCensus grid_census(const std::function<double(double, double)>& f, double lo, double hi, int n,
                              double grad_tol) {
  const double h = (hi - lo) / (n - 1);
  std::vector<double> v(static_cast<std::size_t>(n) * n), g2(v.size(), INFINITY);
  auto at = [&](int i, int j) -> double& { return v[static_cast<std::size_t>(i) * n + j]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) at(i, j) = f(lo + i * h, lo + j * h);
  for (int i = 1; i + 1 < n; ++i)
    for (int j = 1; j + 1 < n; ++j) {
      const double gx = (at(i + 1, j) - at(i - 1, j)) / (2 * h);
      const double gy = (at(i, j + 1) - at(i, j - 1)) / (2 * h);
      g2[static_cast<std::size_t>(i) * n + j] = gx * gx + gy * gy;
    }
  GridCensus out;
  for (int i = 2; i + 2 < n; ++i)
    for (int j = 2; j + 2 < n; ++j) {
      const std::size_t c = static_cast<std::size_t>(i) * n + j;
      if (std::sqrt(g2[c]) >= grad_tol) continue;
      bool strict = true;
      for (int di = -1; di <= 1 && strict; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const std::size_t o = static_cast<std::size_t>(i + di) * n + (j + dj);
          if (g2[o] < g2[c] || (g2[o] == g2[c] && o < c)) {
            strict = false;
            break;
          }
        }
      if (!strict) continue;
      const double fxx = (at(i + 1, j) - 2 * at(i, j) + at(i - 1, j)) / (h * h);
      const double fyy = (at(i, j + 1) - 2 * at(i, j) + at(i, j - 1)) / (h * h);
      const double fxy = (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4 * h * h);
      const double det = fxx * fyy - fxy * fxy;
      if (det < 0) ++out.saddles;
      else if (fxx + fyy > 0) ++out.minima;
      else ++out.maxima;
    }
  return out;
}

}  // namespace testing
