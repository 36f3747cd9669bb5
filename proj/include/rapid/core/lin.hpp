#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rapid {

// Dense row-major matrix helpers for the small linear systems in the
// trajectory solver (tens of unknowns at most).

// Solves A x = b in place with partial-pivot Gaussian elimination.
// Throws on a (numerically) singular system.
inline std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int n) {
  if (static_cast<int>(a.size()) != n * n || static_cast<int>(b.size()) != n)
    throw std::invalid_argument("solve_dense: bad dimensions");
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::fabs(a[col * n + col]);
    for (int r = col + 1; r < n; ++r) {
      double v = std::fabs(a[r * n + col]);
      if (v > best) { best = v; piv = r; }
    }
    if (best < 1e-12)
      throw std::runtime_error("solve_dense: singular system");
    if (piv != col) {
      for (int c = col; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
      std::swap(b[piv], b[col]);
    }
    double d = a[col * n + col];
    for (int r = col + 1; r < n; ++r) {
      double f = a[r * n + col] / d;
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
    x[r] = s / a[r * n + r];
  }
  return x;
}

}  // namespace rapid
