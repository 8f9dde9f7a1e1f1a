#pragma once

#include <vector>

#include "fsac/errors.hpp"
#include "fsac/grid.hpp"

namespace fsac {

// B-spline basis evaluated on a grid. The knot vector is clamped (endpoint
// knots repeated `order` times) and uniform inside, so the basis forms a
// partition of unity over the grid interval.
struct BSplineBasis {
  int order;    // degree + 1
  int n_basis;
  std::vector<double> knots;  // n_basis + order, nondecreasing
  Grid grid;
  Matrix design;  // m x n_basis
};

namespace detail {

// Cox-de Boor: values of the `order` basis functions that are nonzero at t.
// `span` is the knot index with knots[span] <= t < knots[span+1].
inline void bspline_nonzero(const std::vector<double>& knots, int span,
                            int degree, double t, std::vector<double>& out) {
  out.assign(degree + 1, 0.0);
  std::vector<double> left(degree + 1), right(degree + 1);
  out[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[j] = t - knots[span + 1 - j];
    right[j] = knots[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
}

inline int bspline_span(const std::vector<double>& knots, int n_basis,
                        int degree, double t) {
  if (t >= knots[n_basis]) return n_basis - 1;  // right-closed last interval
  int lo = degree, hi = n_basis;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (t < knots[mid] ? hi : lo) = mid;
  }
  return lo;
}

}  // namespace detail

inline BSplineBasis bspline_design(const Grid& grid, int n_basis,
                                   int order = 4) {
  if (order < 2) throw InvalidBasisCount("bspline_design: order must be >= 2");
  if (n_basis < order)
    throw InvalidBasisCount("bspline_design: n_basis must be >= order");

  const double a = grid.a(), b = grid.b();
  const int degree = order - 1;
  std::vector<double> knots(n_basis + order);
  const int intervals = n_basis - order + 1;
  for (int i = 0; i < order; ++i) {
    knots[i] = a;
    knots[n_basis + i] = b;
  }
  for (int i = 1; i < intervals; ++i)
    knots[degree + i] = a + (b - a) * i / intervals;

  const int m = grid.size();
  Matrix design = Matrix::Zero(m, n_basis);
  std::vector<double> vals;
  for (int j = 0; j < m; ++j) {
    const double t = grid.points()[j];
    const int span = detail::bspline_span(knots, n_basis, degree, t);
    detail::bspline_nonzero(knots, span, degree, t, vals);
    for (int r = 0; r <= degree; ++r) design(j, span - degree + r) = vals[r];
  }
  return BSplineBasis{order, n_basis, std::move(knots), grid,
                      std::move(design)};
}

}  // namespace fsac
