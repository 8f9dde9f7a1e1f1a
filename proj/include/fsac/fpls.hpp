#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "fsac/errors.hpp"
#include "fsac/functional_data.hpp"
#include "fsac/grid.hpp"

namespace fsac {

struct FplsOptions {
  // When true, the mean curve and mean response are removed before the
  // iteration (conventional PLS). Off by default: the covariance-maximizing
  // weight functions use uncentered sample moments.
  bool center = false;
};

// Functional partial least squares truncation basis: K weight functions
// phi_1..phi_K with unit quadrature L2 norm, the training score matrix, and
// the per-step deflation slopes needed to score new curves.
struct FplsBasis {
  int K;
  Grid grid;
  Matrix weight_functions;    // K x m, row k is phi_k on the grid
  Matrix scores;              // n x K training scores
  Matrix deflation_slopes_x;  // K x m, row k is a_k on the grid
  Vector deflation_slopes_y;  // K, entry k is b_k
  bool centered = false;
  Vector x_mean;  // m; zero when not centered
  double y_mean = 0.0;
};

// Iterative FPLS fit. Each step takes the weight function proportional to
// the empirical cross-covariance (1/n) sum_i y_i X_i(t) (normalized to unit
// L2 norm, which also fixes its sign), scores the curves by quadrature, and
// deflates both blocks by their least-squares regressions on the score.
// The basis depends on (X, y) only; spatial structure never enters.
inline FplsBasis fpls_fit(const CurveSet& X, const Vector& y, int K,
                          const FplsOptions& options = {}) {
  const int n = X.n();
  const int m = X.m();
  if (y.size() != n) throw LengthMismatch("fpls_fit: y must have one entry per curve");
  if (!y.allFinite()) throw Error("fpls_fit: y has non-finite entries");
  if (K < 1 || K > std::min(n - 1, m))
    throw Error("fpls_fit: K must be in 1..min(n-1, m)");

  const Vector& qw = X.grid.quad_weights();

  Matrix weight_functions = Matrix::Zero(K, m);
  Matrix score_matrix = Matrix::Zero(n, K);
  Matrix slopes_x = Matrix::Zero(K, m);
  Vector slopes_y = Vector::Zero(K);
  Vector x_mean = Vector::Zero(m);
  double y_mean = 0.0;

  Matrix xk = X.values;
  Vector yk = y;
  if (options.center) {
    x_mean = xk.colwise().mean();
    y_mean = yk.mean();
    xk.rowwise() -= x_mean.transpose();
    yk.array() -= y_mean;
  }

  for (int k = 0; k < K; ++k) {
    const Vector cross = xk.transpose() * yk / n;
    const double norm = std::sqrt(inner_product(cross, cross, X.grid));
    if (norm < 1e-12)
      throw DegenerateComponent("fpls_fit: cross-covariance vanished at step " +
                                std::to_string(k + 1));
    const Vector w = cross / norm;
    const Vector z = xk * qw.cwiseProduct(w);
    const double sz = z.squaredNorm();
    if (sz < 1e-12)
      throw ScoreCollapse("fpls_fit: scores vanished at step " +
                          std::to_string(k + 1));
    const Vector a = xk.transpose() * z / sz;
    const double b = yk.dot(z) / sz;

    weight_functions.row(k) = w.transpose();
    score_matrix.col(k) = z;
    slopes_x.row(k) = a.transpose();
    slopes_y[k] = b;

    xk.noalias() -= z * a.transpose();
    yk -= b * z;
  }
  return FplsBasis{K,
                   X.grid,
                   std::move(weight_functions),
                   std::move(score_matrix),
                   std::move(slopes_x),
                   std::move(slopes_y),
                   options.center,
                   std::move(x_mean),
                   y_mean};
}

// Scores of curves under a fitted basis: the same deflate-then-project
// recursion with the training slopes. On the training curves this
// reproduces basis.scores.
inline Matrix scores(const CurveSet& X, const FplsBasis& basis) {
  if (!(X.grid == basis.grid))
    throw GridMismatch("scores: curves are not on the basis grid");
  const Vector& qw = X.grid.quad_weights();
  Matrix xk = X.values;
  if (basis.centered) xk.rowwise() -= basis.x_mean.transpose();
  Matrix z(X.n(), basis.K);
  for (int k = 0; k < basis.K; ++k) {
    z.col(k) = xk * qw.cwiseProduct(basis.weight_functions.row(k).transpose());
    xk.noalias() -= z.col(k) * basis.deflation_slopes_x.row(k);
  }
  return z;
}

// Pointwise linear combination sum_k coefs_k phi_k(t) on the basis grid.
inline Vector reconstruct_beta(const Vector& coefs, const FplsBasis& basis) {
  if (coefs.size() != basis.K)
    throw LengthMismatch("reconstruct_beta: need one coefficient per basis function");
  return basis.weight_functions.transpose() * coefs;
}

// First K components of a fitted basis. The iteration is sequential, so the
// truncation equals a fresh fit with the smaller K.
inline FplsBasis truncate(const FplsBasis& basis, int K) {
  if (K < 1 || K > basis.K) throw Error("truncate: K out of range");
  FplsBasis out = basis;
  out.K = K;
  out.weight_functions = basis.weight_functions.topRows(K);
  out.scores = basis.scores.leftCols(K);
  out.deflation_slopes_x = basis.deflation_slopes_x.topRows(K);
  out.deflation_slopes_y = basis.deflation_slopes_y.head(K);
  return out;
}

}  // namespace fsac
