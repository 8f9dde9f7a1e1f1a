#pragma once

#include <cmath>

#include "fsac/errors.hpp"
#include "fsac/normal.hpp"
#include "fsac/spatial_weights.hpp"

namespace fsac {

struct MoranResult {
  double statistic;
  double z_score;
  double p_value;  // two-sided, normal approximation
  double expectation;
  double variance;
};

// Moran's I with the normality-based null moments:
//   I = (n / S0) (v' W v) / (v' v),  v = x - mean(x)
//   E[I] = -1 / (n - 1)
//   Var[I] = (n^2 S1 - n S2 + 3 S0^2) / ((n^2 - 1) S0^2) - E[I]^2.
inline MoranResult morans_i(const Vector& values, const WeightMatrix& W) {
  const int n = static_cast<int>(values.size());
  if (W.n() != n || W.values.cols() != n)
    throw LengthMismatch("morans_i: weight matrix must match values");
  if (n < 3) throw Error("morans_i: need at least 3 observations");
  if (values.maxCoeff() == values.minCoeff())
    throw ConstantInput("morans_i: values are constant");

  const Vector v = values.array() - values.mean();
  const double s0 = W.values.sum();
  if (!(s0 > 0.0)) throw Error("morans_i: weights sum to zero");
  const double s1 = 0.5 * (W.values + W.values.transpose()).squaredNorm();
  const Vector totals = W.values.rowwise().sum() + W.values.colwise().sum().transpose();
  const double s2 = totals.squaredNorm();

  const double i_stat = (n / s0) * v.dot(W.values * v) / v.squaredNorm();
  const double expectation = -1.0 / (n - 1);
  const double variance =
      (n * static_cast<double>(n) * s1 - n * s2 + 3.0 * s0 * s0) /
          ((static_cast<double>(n) * n - 1.0) * s0 * s0) -
      expectation * expectation;
  const double z = (i_stat - expectation) / std::sqrt(variance);
  const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
  return MoranResult{i_stat, z, p, expectation, variance};
}

}  // namespace fsac
