#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "fsac/errors.hpp"

namespace fsac {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Undirected neighbor structure over spatial units 1..n. Pairs are stored
// with i < j; duplicates collapse. Self-loops are rejected.
class Adjacency {
 public:
  Adjacency(int n, std::vector<std::pair<int, int>> edges) : n_(n) {
    if (n_ < 1) throw Error("Adjacency: need at least one unit");
    for (auto& [i, j] : edges) {
      if (i == j) throw Error("Adjacency: self-loop at unit " + std::to_string(i));
      if (i > j) std::swap(i, j);
      if (i < 1 || j > n_)
        throw IndexOutOfRange("Adjacency: edge (" + std::to_string(i) + "," +
                              std::to_string(j) + ") outside 1.." +
                              std::to_string(n_));
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);
  }

  int n() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

 private:
  int n_;
  std::vector<std::pair<int, int>> edges_;  // 1-based, i < j
};

// Spatial weight matrix. Immutable once built; eigenvalues of the matrix are
// cached at row normalization so that log|I - aW| later costs O(n).
struct WeightMatrix {
  Matrix values;
  std::vector<std::complex<double>> eigenvalues;  // empty until normalized
  bool row_normalized = false;
  std::vector<int> isolated_units;  // 1-based rows with no neighbors

  int n() const { return static_cast<int>(values.rows()); }
};

// Rook (edge-sharing) neighbors on a rows x cols lattice; unit ids run
// row-major starting at 1.
inline Adjacency build_rook_grid(int rows, int cols) {
  if (rows < 2 || cols < 2)
    throw Error("build_rook_grid: lattice must be at least 2x2");
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(2 * rows * cols - rows - cols));
  auto id = [cols](int r, int c) { return r * cols + c + 1; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.emplace_back(id(r, c), id(r, c + 1));
      if (r + 1 < rows) edges.emplace_back(id(r, c), id(r + 1, c));
    }
  }
  return Adjacency(rows * cols, std::move(edges));
}

// Binary first-order contiguity matrix from a neighbor structure.
inline WeightMatrix build_contiguity(const Adjacency& adjacency) {
  if (adjacency.n() < 2) throw Error("build_contiguity: need n >= 2");
  if (adjacency.edges().empty())
    throw EmptyGraph("build_contiguity: adjacency has no edges");
  WeightMatrix w;
  w.values = Matrix::Zero(adjacency.n(), adjacency.n());
  for (const auto& [i, j] : adjacency.edges()) {
    if (i < 1 || j > adjacency.n())
      throw IndexOutOfRange("build_contiguity: edge endpoint out of range");
    w.values(i - 1, j - 1) = 1.0;
    w.values(j - 1, i - 1) = 1.0;
  }
  return w;
}

// Divides each row by its sum and caches the spectrum of the result. Rows of
// all zeros (isolated units) are kept and reported through isolated_units;
// the |rho| < 1 invertibility argument assumes row sums of one, so callers
// should surface the warning.
inline WeightMatrix row_normalize(const WeightMatrix& w) {
  const int n = w.n();
  if (w.values.cols() != n) throw Error("row_normalize: matrix must be square");
  if ((w.values.array() < 0.0).any())
    throw Error("row_normalize: negative entries");
  if (w.values.diagonal().cwiseAbs().maxCoeff() != 0.0)
    throw Error("row_normalize: nonzero diagonal");

  WeightMatrix out;
  out.values = w.values;
  for (int i = 0; i < n; ++i) {
    const double s = out.values.row(i).sum();
    if (s > 0.0) {
      out.values.row(i) /= s;
    } else {
      out.isolated_units.push_back(i + 1);
    }
  }
  out.row_normalized = true;

  Eigen::EigenSolver<Matrix> solver(out.values, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw Error("row_normalize: eigenvalue computation failed");
  const auto& ev = solver.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  return out;
}

}  // namespace fsac
