#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace fsac {

struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0.0;
  int iterations = 0;
  int evaluations = 0;
  double path_length = 0.0;  // total movement of the incumbent best vertex
  bool converged = false;
};

namespace detail {

// Nelder-Mead minimization with every candidate clamped to the box
// [lo, hi]^d. Converges when the simplex diameter (max coordinate spread
// around the best vertex) drops below `tol` or after `max_iter` iterations.
template <typename F>
NelderMeadResult nelder_mead_box(F&& f, std::vector<double> x0, double step,
                                 double lo, double hi, double tol,
                                 int max_iter) {
  const int d = static_cast<int>(x0.size());
  NelderMeadResult result;

  auto clamp = [lo, hi](std::vector<double> v) {
    for (double& c : v) c = std::clamp(c, lo, hi);
    return v;
  };

  std::vector<std::vector<double>> verts;
  verts.push_back(clamp(x0));
  for (int i = 0; i < d; ++i) {
    auto v = verts[0];
    v[i] += step;
    if (v[i] > hi) v[i] = verts[0][i] - step;  // step inward at the boundary
    verts.push_back(clamp(std::move(v)));
  }

  std::vector<double> fv(d + 1);
  for (int i = 0; i <= d; ++i) {
    fv[i] = f(verts[i]);
    ++result.evaluations;
  }

  std::vector<int> order(d + 1);
  std::iota(order.begin(), order.end(), 0);
  auto sort_order = [&] {
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return fv[a] < fv[b]; });
  };
  sort_order();
  std::vector<double> prev_best = verts[order[0]];

  auto dist_inf = [](const std::vector<double>& a,
                     const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      m = std::max(m, std::abs(a[i] - b[i]));
    return m;
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    result.iterations = iter + 1;

    double diameter = 0.0;
    for (int i = 1; i <= d; ++i)
      diameter = std::max(diameter, dist_inf(verts[order[i]], verts[order[0]]));
    if (diameter < tol) {
      result.converged = true;
      break;
    }

    // centroid of all but the worst vertex
    std::vector<double> centroid(d, 0.0);
    for (int i = 0; i < d; ++i)
      for (int c = 0; c < d; ++c) centroid[c] += verts[order[i]][c] / d;
    const int worst = order[d];

    auto affine = [&](double coef) {
      std::vector<double> v(d);
      for (int c = 0; c < d; ++c)
        v[c] = centroid[c] + coef * (centroid[c] - verts[worst][c]);
      return clamp(std::move(v));
    };

    auto reflected = affine(1.0);
    const double fr = f(reflected);
    ++result.evaluations;

    if (fr < fv[order[0]]) {
      auto expanded = affine(2.0);
      const double fe = f(expanded);
      ++result.evaluations;
      if (fe < fr) {
        verts[worst] = std::move(expanded);
        fv[worst] = fe;
      } else {
        verts[worst] = std::move(reflected);
        fv[worst] = fr;
      }
    } else if (fr < fv[order[d - 1]]) {
      verts[worst] = std::move(reflected);
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      auto contracted = outside ? affine(0.5) : affine(-0.5);
      const double fc = f(contracted);
      ++result.evaluations;
      if (fc < (outside ? fr : fv[worst])) {
        verts[worst] = std::move(contracted);
        fv[worst] = fc;
      } else {
        // shrink toward the best vertex
        for (int i = 1; i <= d; ++i) {
          auto& v = verts[order[i]];
          for (int c = 0; c < d; ++c)
            v[c] = verts[order[0]][c] + 0.5 * (v[c] - verts[order[0]][c]);
          fv[order[i]] = f(v);
          ++result.evaluations;
        }
      }
    }

    sort_order();
    const auto& best = verts[order[0]];
    result.path_length += dist_inf(best, prev_best);
    prev_best = best;
  }

  sort_order();
  result.x = verts[order[0]];
  result.fx = fv[order[0]];
  return result;
}

}  // namespace detail
}  // namespace fsac
