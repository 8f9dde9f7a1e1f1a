#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fsac/errors.hpp"
#include "fsac/fpls.hpp"
#include "fsac/normal.hpp"
#include "fsac/optimize.hpp"
#include "fsac/spatial_weights.hpp"

namespace fsac {

// Data entering the likelihood: response, score matrix Z_K, the response-lag
// matrix W (parameter rho) and the disturbance-lag matrix M (parameter
// lambda). The basis is only needed to map beta_K back to a curve; purely
// score-level problems may omit it.
struct FsacSpec {
  Vector y;
  Matrix Z;  // n x K
  WeightMatrix W;
  WeightMatrix M;
  std::optional<FplsBasis> basis;
};

inline void validate(const FsacSpec& spec) {
  const auto n = spec.y.size();
  if (spec.Z.rows() != n || spec.Z.cols() < 1)
    throw LengthMismatch("FsacSpec: Z must have one row per observation");
  if (spec.W.n() != n || spec.M.n() != n)
    throw LengthMismatch("FsacSpec: weight matrices must match y");
  if (!spec.W.row_normalized || !spec.M.row_normalized)
    throw Error("FsacSpec: W and M must be row-normalized");
  if (spec.W.eigenvalues.empty() || spec.M.eigenvalues.empty())
    throw Error("FsacSpec: weight matrices are missing cached eigenvalues");
}

struct OptimizerTrace {
  double grid_rho = 0.0;
  double grid_lambda = 0.0;
  double grid_loglik = 0.0;
  int iterations = 0;
  int evaluations = 0;
  double path_length = 0.0;
  bool converged = true;
};

struct FsacFit {
  double rho_hat = 0.0;
  double lambda_hat = 0.0;
  double sigma2_hat = 0.0;
  double loglik = 0.0;
  double bic = 0.0;
  int K = 0;
  Vector beta_coefs;
  Vector beta_fn;  // empty when the spec carries no basis
  Matrix sigma_k;  // Z' Omega(lambda_hat) Z
  std::optional<FplsBasis> basis;
  OptimizerTrace trace;
  std::vector<double> bic_trace;  // filled by select_k
};

struct ConfidenceBand {
  Grid grid;
  Vector lower;
  Vector upper;
  double alpha;
  double multiplier;  // z_{1 - alpha/2}
};

struct FitOptions {
  std::optional<double> fixed_rho;
  std::optional<double> fixed_lambda;
  int grid_points = 21;
  double bound_margin = 1e-4;  // optimization box is |a| <= 1 - bound_margin
  double simplex_tol = 1e-8;
  int max_iterations = 500;
};

// Omega(lambda) = (I - lambda M)' (I - lambda M), the error-whitening Gram
// matrix of the disturbance equation.
inline Matrix omega(double lambda, const WeightMatrix& M) {
  const Matrix b =
      Matrix::Identity(M.n(), M.n()) - lambda * M.values;
  return b.transpose() * b;
}

// log |I - a S| from the cached spectrum of S: sum_i log|1 - a eig_i|. For a
// real matrix the imaginary parts cancel over conjugate pairs, and with
// |a| < 1 and a row-stochastic S the determinant stays positive.
inline double log_det_shift(double a, const WeightMatrix& S) {
  if (!(std::abs(a) < 1.0))
    throw Error("log_det_shift: |a| must be < 1");
  if (!S.row_normalized || S.eigenvalues.empty())
    throw Error("log_det_shift: matrix must be row-normalized with cached eigenvalues");
  double sum = 0.0;
  for (const auto& eig : S.eigenvalues) {
    const double mag = std::abs(1.0 - a * eig);
    if (mag < 1e-14)
      throw SingularShift("log_det_shift: shift touches an eigenvalue");
    sum += std::log(mag);
  }
  return sum;
}

namespace detail {

// Profiled evaluation of the concentrated likelihood. Everything that does
// not depend on (rho, lambda) is precomputed, so one evaluation costs
// O(nK^2) plus the O(n) eigenvalue sums:
//   B(lambda) A(rho) y = y - rho Wy - lambda My + rho lambda MWy
//   B(lambda) Z       = Z - lambda MZ
// and beta solves the normal equations of ||B A y - B Z b||.
class ConcentratedEval {
 public:
  explicit ConcentratedEval(const FsacSpec& spec)
      : w_(&spec.W),
        m_(&spec.M),
        z_(&spec.Z),
        n_(static_cast<int>(spec.y.size())),
        y_(spec.y),
        wy_(spec.W.values * spec.y),
        my_(spec.M.values * spec.y),
        mwy_(spec.M.values * wy_),
        mz_(spec.M.values * spec.Z) {}

  struct Result {
    double lc;
    Vector beta;
    double sigma2;
    Matrix gram;  // Z' Omega(lambda) Z
  };

  Result eval(double rho, double lambda) const {
    const Vector br = y_ - rho * wy_ - lambda * my_ + (rho * lambda) * mwy_;
    const Matrix bz = *z_ - lambda * mz_;
    Matrix gram = bz.transpose() * bz;
    gram = 0.5 * (gram + gram.transpose()).eval();
    const Vector rhs = bz.transpose() * br;
    const Vector beta = Eigen::LDLT<Matrix>(gram).solve(rhs);
    const double sigma2 = (br - bz * beta).squaredNorm() / n_;
    if (sigma2 < 1e-300)
      throw DegenerateVariance("concentrated_loglik: residual variance vanished");
    constexpr double log_2pi = 1.8378770664093454835606594728112;
    const double lc = -0.5 * n_ - 0.5 * n_ * log_2pi -
                      0.5 * n_ * std::log(sigma2) + log_det_shift(rho, *w_) +
                      log_det_shift(lambda, *m_);
    return Result{lc, beta, sigma2, std::move(gram)};
  }

  int n() const { return n_; }

 private:
  const WeightMatrix* w_;
  const WeightMatrix* m_;
  const Matrix* z_;
  int n_;
  Vector y_, wy_, my_, mwy_;
  Matrix mz_;
};

inline void check_information(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw SingularInformation("information matrix Z' Omega Z is ill-conditioned");
}

}  // namespace detail

// Closed-form ML estimate of beta_K at fixed (rho, lambda):
// [Z' Omega(lambda) Z]^{-1} Z' Omega(lambda) (I - rho W) y.
inline Vector beta_hat(double rho, double lambda, const FsacSpec& spec) {
  validate(spec);
  const auto res = detail::ConcentratedEval(spec).eval(rho, lambda);
  detail::check_information(res.gram);
  return res.beta;
}

// ML variance at fixed (rho, lambda): the whitened residual quadratic form
// divided by n.
inline double sigma2_hat(double rho, double lambda, const FsacSpec& spec) {
  validate(spec);
  const auto res = detail::ConcentratedEval(spec).eval(rho, lambda);
  detail::check_information(res.gram);
  return res.sigma2;
}

// Concentrated log-likelihood
//   l_c = -n/2 - (n/2) log(2 pi) - (n/2) log sigma2_hat(rho, lambda)
//         + log|I - rho W| + log|I - lambda M|.
inline double concentrated_loglik(double rho, double lambda,
                                  const FsacSpec& spec) {
  validate(spec);
  if (!(std::abs(rho) < 1.0 && std::abs(lambda) < 1.0))
    throw Error("concentrated_loglik: parameters must lie in (-1, 1)");
  return detail::ConcentratedEval(spec).eval(rho, lambda).lc;
}

// Full truncated log-likelihood at explicit (beta_K, sigma2, rho, lambda),
// with the quadratic form taken through the explicit Omega product. Used as
// the plug-in identity and gradient oracle target.
inline double full_loglik(const Vector& beta, double sigma2, double rho,
                          double lambda, const FsacSpec& spec) {
  validate(spec);
  if (!(sigma2 > 0.0)) throw Error("full_loglik: sigma2 must be positive");
  const auto n = spec.y.size();
  const Vector ay = spec.y - rho * (spec.W.values * spec.y);
  const Vector resid = ay - spec.Z * beta;
  const double quad = resid.dot(omega(lambda, spec.M) * resid);
  constexpr double log_2pi = 1.8378770664093454835606594728112;
  return -0.5 * n * log_2pi - 0.5 * n * std::log(sigma2) -
         quad / (2.0 * sigma2) + log_det_shift(rho, spec.W) +
         log_det_shift(lambda, spec.M);
}

// d l_K / d beta_K = (1/sigma2) Z' Omega(lambda) (Ay - Z beta).
inline Vector loglik_grad_beta(const Vector& beta, double sigma2, double rho,
                               double lambda, const FsacSpec& spec) {
  const Vector ay = spec.y - rho * (spec.W.values * spec.y);
  const Vector resid = ay - spec.Z * beta;
  return spec.Z.transpose() * (omega(lambda, spec.M) * resid) / sigma2;
}

// d l_K / d sigma2 = -n/(2 sigma2) + quad/(2 sigma2^2).
inline double loglik_grad_sigma2(const Vector& beta, double sigma2, double rho,
                                 double lambda, const FsacSpec& spec) {
  const auto n = spec.y.size();
  const Vector ay = spec.y - rho * (spec.W.values * spec.y);
  const Vector resid = ay - spec.Z * beta;
  const double quad = resid.dot(omega(lambda, spec.M) * resid);
  return -0.5 * n / sigma2 + 0.5 * quad / (sigma2 * sigma2);
}

inline double bic_value(double loglik, int K, Eigen::Index n) {
  // free parameters: beta_K (K of them), rho, lambda, sigma2
  return -2.0 * loglik + (K + 3) * std::log(static_cast<double>(n));
}

// Maximizes the concentrated log-likelihood over the free autoregressive
// parameters: a coarse grid scan seeds Nelder-Mead refinement inside the box
// (-1 + margin, 1 - margin)^2. Either parameter may be pinned through the
// options, which profiles over the other (or skips optimization entirely).
inline FsacFit fit(const FsacSpec& spec, const FitOptions& options = {}) {
  validate(spec);
  const detail::ConcentratedEval ce(spec);
  const int n = ce.n();
  const int K = static_cast<int>(spec.Z.cols());
  const double lo = -1.0 + options.bound_margin;
  const double hi = 1.0 - options.bound_margin;

  struct Param {
    bool fixed;
    double value;
  };
  Param rho{options.fixed_rho.has_value(), options.fixed_rho.value_or(0.0)};
  Param lambda{options.fixed_lambda.has_value(),
               options.fixed_lambda.value_or(0.0)};
  for (const auto& p : {rho, lambda})
    if (p.fixed && !(std::abs(p.value) < 1.0))
      throw Error("fit: fixed parameter must lie in (-1, 1)");

  std::vector<int> free_dims;  // 0 = rho, 1 = lambda
  if (!rho.fixed) free_dims.push_back(0);
  if (!lambda.fixed) free_dims.push_back(1);

  auto compose = [&](const std::vector<double>& v) {
    double r = rho.value, l = lambda.value;
    for (std::size_t i = 0; i < free_dims.size(); ++i)
      (free_dims[i] == 0 ? r : l) = v[i];
    return std::make_pair(r, l);
  };
  auto lc_at = [&](const std::vector<double>& v) -> double {
    const auto [r, l] = compose(v);
    try {
      return ce.eval(r, l).lc;
    } catch (const DegenerateVariance&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  // coarse grid scan
  const int g = options.grid_points;
  std::vector<double> nodes(g);
  for (int i = 0; i < g; ++i) nodes[i] = lo + (hi - lo) * i / (g - 1);

  std::vector<double> best(free_dims.size(), 0.0);
  double best_lc = -std::numeric_limits<double>::infinity();
  std::vector<double> point(free_dims.size());
  const int total = free_dims.empty() ? 1
                    : free_dims.size() == 1
                        ? g
                        : g * g;
  for (int idx = 0; idx < total; ++idx) {
    if (free_dims.size() >= 1) point[0] = nodes[idx % g];
    if (free_dims.size() == 2) point[1] = nodes[idx / g];
    const double lc = lc_at(point);
    if (lc > best_lc) {
      best_lc = lc;
      best = point;
    }
  }
  if (!std::isfinite(best_lc))
    throw OptimizerFailure("fit: concentrated likelihood is degenerate everywhere");

  OptimizerTrace trace;
  {
    const auto [r, l] = compose(best);
    trace.grid_rho = r;
    trace.grid_lambda = l;
    trace.grid_loglik = best_lc;
  }

  double opt_lc = best_lc;
  std::vector<double> opt = best;
  if (!free_dims.empty()) {
    const double step = 0.5 * (hi - lo) / (g - 1);
    auto nm = detail::nelder_mead_box(
        [&](const std::vector<double>& v) { return -lc_at(v); }, best, step,
        lo, hi, options.simplex_tol, options.max_iterations);
    opt = nm.x;
    opt_lc = -nm.fx;
    trace.iterations = nm.iterations;
    trace.evaluations = nm.evaluations;
    trace.path_length = nm.path_length;
    trace.converged = nm.converged;

    // coordinatewise parabolic polish: the simplex stops at diameter
    // simplex_tol, which leaves the maximizer localized only to that scale;
    // two interpolation rounds pin it far more tightly so constrained fits
    // agree with independent profile solutions at coefficient level
    for (double h : {1e-5, 1e-6}) {
      for (std::size_t i = 0; i < free_dims.size(); ++i) {
        if (opt[i] - h < lo || opt[i] + h > hi) continue;
        auto up = opt, dn = opt;
        up[i] += h;
        dn[i] -= h;
        const double f0 = lc_at(opt), fu = lc_at(up), fd = lc_at(dn);
        trace.evaluations += 3;
        const double curv = fu - 2.0 * f0 + fd;
        if (!(curv < -1e-300)) continue;
        const double shift =
            std::clamp(-h * (fu - fd) / (2.0 * curv), -h, h);
        auto cand = opt;
        cand[i] = std::clamp(cand[i] + shift, lo, hi);
        const double fc = lc_at(cand);
        ++trace.evaluations;
        // near the optimum lc is flat to evaluation noise, so the vertex is
        // accepted up to a noise-scale slack rather than a strict increase
        if (fc >= f0 - 1e-10 * std::max(1.0, std::abs(f0))) {
          opt = cand;
          opt_lc = std::max(fc, f0);
        }
      }
    }

    if (opt_lc < best_lc - 1e-12)
      throw OptimizerFailure("fit: refinement lost the grid optimum");
    for (double c : opt)
      if (!(c >= lo && c <= hi))
        throw OptimizerFailure("fit: refinement left the parameter box");
  }

  const auto [rho_hat, lambda_hat] = compose(opt);
  const auto res = ce.eval(rho_hat, lambda_hat);
  detail::check_information(res.gram);

  FsacFit out;
  out.rho_hat = rho_hat;
  out.lambda_hat = lambda_hat;
  out.sigma2_hat = res.sigma2;
  out.loglik = res.lc;
  out.K = K;
  out.beta_coefs = res.beta;
  out.sigma_k = res.gram;
  out.bic = bic_value(res.lc, K, n);
  out.trace = trace;
  if (spec.basis) {
    out.basis = spec.basis;
    out.beta_fn = reconstruct_beta(res.beta, *spec.basis);
  }
  return out;
}

// Pointwise 100(1-alpha)% band around the estimated coefficient curve:
// beta_hat(t) +- z_{1-alpha/2} sigma_hat sqrt(Phi(t)' Sigma_K^{-1} Phi(t)).
// Treats (rho, lambda) as known at their estimates; the plug-in ignores
// their sampling variability.
inline ConfidenceBand confidence_band(const FsacFit& fit, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error("confidence_band: alpha must be in (0, 1)");
  if (!fit.basis)
    throw Error("confidence_band: fit carries no functional basis");
  detail::check_information(fit.sigma_k);

  const Matrix& phi = fit.basis->weight_functions;  // K x m
  const Matrix solved = Eigen::LDLT<Matrix>(fit.sigma_k).solve(phi);
  const Vector se =
      (phi.array() * solved.array()).colwise().sum().sqrt().transpose();
  const double mult = normal_quantile(1.0 - 0.5 * alpha);
  const Vector half = mult * std::sqrt(fit.sigma2_hat) * se;
  return ConfidenceBand{fit.basis->grid, fit.beta_fn - half,
                        fit.beta_fn + half, alpha, mult};
}

inline double bic(const FsacSpec& spec, const FsacFit& fit) {
  return bic_value(fit.loglik, fit.K, spec.y.size());
}

// Scans K = 1..k_max (FPLS basis plus ML fit for each) and returns the fit
// minimizing BIC, ties toward the smaller K. The FPLS iteration is nested,
// so one pass at the largest attainable K provides every candidate basis.
inline FsacFit select_k(const Vector& y, const CurveSet& X,
                        const WeightMatrix& W, const WeightMatrix& M,
                        int k_max, const FitOptions& fit_options = {},
                        const FplsOptions& fpls_options = {}) {
  const int n = X.n();
  if (k_max < 1 || k_max > std::min(n - 1, X.m()))
    throw Error("select_k: k_max must be in 1..min(n-1, m)");

  std::optional<FplsBasis> full;
  int k_avail = 0;
  for (int kk = k_max; kk >= 1; --kk) {
    try {
      full = fpls_fit(X, y, kk, fpls_options);
      k_avail = kk;
      break;
    } catch (const DegenerateComponent&) {
      if (kk == 1) throw;
    } catch (const ScoreCollapse&) {
      if (kk == 1) throw;
    }
  }

  std::vector<double> bic_trace(k_max,
                                std::numeric_limits<double>::quiet_NaN());
  std::optional<FsacFit> best;
  for (int K = 1; K <= k_avail; ++K) {
    FsacSpec spec{y, full->scores.leftCols(K), W, M, truncate(*full, K)};
    FsacFit candidate = fit(spec, fit_options);
    bic_trace[K - 1] = candidate.bic;
    if (!best || candidate.bic < best->bic) best = std::move(candidate);
  }
  best->bic_trace = std::move(bic_trace);
  return *best;
}

}  // namespace fsac
