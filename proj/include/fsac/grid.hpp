#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fsac/errors.hpp"

namespace fsac {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Strictly increasing observation points spanning a compact interval.
// Composite trapezoid weights are precomputed once; every integral in the
// pipeline is the same quadrature, so curves never need a second
// representation.
class Grid {
 public:
  explicit Grid(std::vector<double> points) : points_(std::move(points)) {
    const int m = static_cast<int>(points_.size());
    if (m < 3) throw Error("Grid: need at least 3 points");
    for (int i = 1; i < m; ++i)
      if (!(points_[i] > points_[i - 1]))
        throw Error("Grid: points must be strictly increasing");
    weights_ = Vector::Zero(m);
    for (int i = 0; i + 1 < m; ++i) {
      const double h = 0.5 * (points_[i + 1] - points_[i]);
      weights_[i] += h;
      weights_[i + 1] += h;
    }
  }

  static Grid equispaced(double a, double b, int m) {
    if (m < 3) throw Error("Grid: need at least 3 points");
    if (!(b > a)) throw Error("Grid: interval must be nondegenerate");
    std::vector<double> pts(m);
    for (int i = 0; i < m; ++i) pts[i] = a + (b - a) * i / (m - 1);
    return Grid(std::move(pts));
  }

  int size() const { return static_cast<int>(points_.size()); }
  double a() const { return points_.front(); }
  double b() const { return points_.back(); }
  const std::vector<double>& points() const { return points_; }
  const Vector& quad_weights() const { return weights_; }

  Vector as_vector() const {
    return Eigen::Map<const Vector>(points_.data(), size());
  }

  friend bool operator==(const Grid& x, const Grid& y) {
    return x.points_ == y.points_;
  }

 private:
  std::vector<double> points_;
  Vector weights_;
};

// Composite trapezoid approximation of the integral of f*g over the grid
// interval. Exact for piecewise-linear integrands, hence for polynomials of
// degree <= 1 on equispaced grids.
inline double inner_product(const Eigen::Ref<const Vector>& f,
                            const Eigen::Ref<const Vector>& g,
                            const Grid& grid) {
  if (f.size() != grid.size() || g.size() != grid.size())
    throw LengthMismatch("inner_product: lengths must match the grid");
  return (f.array() * g.array() * grid.quad_weights().array()).sum();
}

}  // namespace fsac
