#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "fsac/bspline.hpp"
#include "fsac/errors.hpp"
#include "fsac/grid.hpp"
#include "fsac/random.hpp"

namespace fsac {

// n curves discretized on one shared grid; row i is X_i on the grid.
struct CurveSet {
  Grid grid;
  Matrix values;  // n x m

  CurveSet(Grid g, Matrix v) : grid(std::move(g)), values(std::move(v)) {
    if (values.cols() != grid.size())
      throw LengthMismatch("CurveSet: values must have one column per grid point");
    if (!values.allFinite()) throw Error("CurveSet: non-finite entries");
  }

  int n() const { return static_cast<int>(values.rows()); }
  int m() const { return static_cast<int>(values.cols()); }
};

namespace detail {

// Least-squares projection machinery shared by smoothing and CV. The QR of
// the design is rank-revealing; a deficient design is an input error, not
// something to pseudo-invert silently.
struct SplineProjector {
  BSplineBasis basis;
  Eigen::ColPivHouseholderQR<Matrix> qr;
  Matrix thin_q;  // m x n_basis, orthonormal columns spanning col(design)

  SplineProjector(const Grid& grid, int n_basis, int order)
      : basis(bspline_design(grid, n_basis, order)), qr(basis.design) {
    if (qr.rank() < n_basis)
      throw RankDeficientDesign(
          "smooth_curves: spline design is rank deficient (n_basis " +
          std::to_string(n_basis) + " on " + std::to_string(grid.size()) +
          " points)");
    thin_q = qr.householderQ() * Matrix::Identity(grid.size(), n_basis);
  }

  // Rows of `raw` projected onto the spline space, evaluated on the grid.
  Matrix smooth(const Matrix& raw) const {
    // projection = Q Q^T x per curve; rows held as curves
    return (thin_q * (thin_q.transpose() * raw.transpose())).transpose();
  }

  // Leverage h_jj of the hat matrix Q Q^T.
  Vector leverages() const { return thin_q.rowwise().squaredNorm(); }
};

}  // namespace detail

// Least-squares B-spline smoothing of each raw row, evaluated back on the
// grid. Cubic splines unless the caller overrides the order.
inline CurveSet smooth_curves(const Matrix& raw, const Grid& grid, int n_basis,
                              int order = 4) {
  if (raw.cols() != grid.size())
    throw LengthMismatch("smooth_curves: raw rows must match the grid");
  if (n_basis > grid.size())
    throw RankDeficientDesign("smooth_curves: n_basis exceeds grid size");
  detail::SplineProjector proj(grid, n_basis, order);
  return CurveSet(grid, proj.smooth(raw));
}

// Leave-one-grid-point-out cross-validation over the candidate basis counts,
// summed over curves; returns the winner. Uses the hat-matrix identity
// e_loo = e / (1 - h_jj), which equals refitting with the point removed.
// Near-ties at numerical noise level resolve toward the smaller basis.
inline int cv_select_nbasis(const Matrix& raw, const Grid& grid,
                            std::vector<int> candidates, int order = 4) {
  if (candidates.empty()) throw Error("cv_select_nbasis: no candidates");
  if (raw.cols() != grid.size())
    throw LengthMismatch("cv_select_nbasis: raw rows must match the grid");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  int best = candidates.front();
  double best_cv = std::numeric_limits<double>::infinity();
  for (int n_basis : candidates) {
    if (n_basis > grid.size())
      throw RankDeficientDesign("cv_select_nbasis: candidate exceeds grid size");
    detail::SplineProjector proj(grid, n_basis, order);
    const Vector h = proj.leverages();
    const Matrix resid = raw - proj.smooth(raw);
    double cv = 0.0;
    for (int j = 0; j < grid.size(); ++j) {
      const double denom = 1.0 - h[j];
      if (denom < 1e-12) {
        cv = std::numeric_limits<double>::infinity();
        break;
      }
      cv += resid.col(j).squaredNorm() / (denom * denom);
    }
    const double tie_margin =
        std::isfinite(best_cv) ? 1e-10 + 1e-8 * std::abs(best_cv) : 0.0;
    if (cv < best_cv - tie_margin) {
      best_cv = cv;
      best = n_basis;
    }
  }
  return best;
}

// Standard Brownian paths on the grid: zero at t=0, independent Gaussian
// increments with variance equal to the time step. Curves are drawn row by
// row, so the seed pins the whole set.
inline CurveSet simulate_brownian(int n, const Grid& grid,
                                  std::uint64_t seed) {
  if (n < 1) throw Error("simulate_brownian: need n >= 1");
  const int m = grid.size();
  const auto& t = grid.points();
  Rng rng(seed);
  Matrix x(n, m);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = t[0] == 0.0 ? 0.0 : std::sqrt(t[0]) * rng.gaussian();
    for (int j = 1; j < m; ++j)
      x(i, j) = x(i, j - 1) + std::sqrt(t[j] - t[j - 1]) * rng.gaussian();
  }
  return CurveSet(grid, std::move(x));
}

}  // namespace fsac
