#pragma once

#include <Eigen/LU>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fsac/estimation.hpp"
#include "fsac/functional_data.hpp"
#include "fsac/random.hpp"
#include "fsac/spatial_weights.hpp"

namespace fsac {

// One Monte Carlo scenario: a (rho, lambda) pair on a rook lattice with
// Brownian covariates and a fixed coefficient curve.
struct ScenarioConfig {
  double rho = 0.5;
  double lambda = 0.5;
  int n_reps = 500;
  std::uint64_t seed = 0;
  int rows = 11;
  int cols = 11;
  int grid_size = 101;
  int fixed_k = 0;  // > 0 pins K; otherwise BIC scan up to k_max
  int k_max = 6;
  bool fixed_x = false;   // draw the curves once and reuse across replications
  bool keep_beta = false; // retain each replication's coefficient curve
  Vector beta_true;       // on the grid; empty selects default_beta

  Grid grid() const { return Grid::equispaced(0.0, 1.0, grid_size); }
};

// The simulation's coefficient curve, beta(t) = t sin^2(pi t).
inline Vector default_beta(const Grid& grid) {
  constexpr double pi = 3.14159265358979323846;
  Vector beta(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    const double t = grid.points()[j];
    const double s = std::sin(pi * t);
    beta[j] = t * s * s;
  }
  return beta;
}

struct RepRecord {
  int rep;
  double rho_hat;
  double lambda_hat;
  double sigma2_hat;
  double ise;
  int K;
};

struct SimulationReport {
  ScenarioConfig config;
  Vector beta_true;
  std::vector<RepRecord> reps;
  std::vector<int> failed_reps;
  double mean_rho = 0.0;
  double mean_lambda = 0.0;
  double mean_sigma2 = 0.0;
  double mise = 0.0;
  std::vector<Vector> beta_curves;  // only when config.keep_beta
};

// Trapezoid integrated squared error of a coefficient estimate.
inline double ise(const Vector& beta_est, const Vector& beta_true,
                  const Grid& grid) {
  if (beta_est.size() != grid.size() || beta_true.size() != grid.size())
    throw LengthMismatch("ise: curves must match the grid");
  const Vector diff = beta_est - beta_true;
  return inner_product(diff, diff, grid);
}

namespace detail {

// Reduced form of the data generating process,
//   y = (I - rho W)^{-1} integ + (I - rho W)^{-1} (I - lambda W)^{-1} eps,
// with integ_i the quadrature of X_i beta.
inline Vector dgp_response(const WeightMatrix& W, const Grid& grid,
                           const CurveSet& X, const Vector& beta,
                           const Vector& eps, double rho, double lambda) {
  const int n = W.n();
  const Vector integ = X.values * grid.quad_weights().cwiseProduct(beta);
  const Matrix a = Matrix::Identity(n, n) - rho * W.values;
  const Matrix b = Matrix::Identity(n, n) - lambda * W.values;
  const Vector u = Eigen::PartialPivLU<Matrix>(b).solve(eps);
  return Eigen::PartialPivLU<Matrix>(a).solve(integ + u);
}

inline Vector draw_gaussian_vector(int n, std::uint64_t seed) {
  Rng rng(seed);
  Vector eps(n);
  for (int i = 0; i < n; ++i) eps[i] = rng.gaussian();
  return eps;
}

// Substream layout within one replication seed: stream 0 draws the curves,
// stream 1 draws the disturbances.
inline std::pair<Vector, CurveSet> draw_rep(const ScenarioConfig& config,
                                            std::uint64_t rep_seed,
                                            const WeightMatrix& W,
                                            const std::optional<CurveSet>& x_fixed) {
  const Grid grid = config.grid();
  const int n = W.n();
  CurveSet X = x_fixed ? *x_fixed
                       : simulate_brownian(n, grid, split_seed(rep_seed, 0));
  const Vector eps = draw_gaussian_vector(n, split_seed(rep_seed, 1));
  const Vector beta =
      config.beta_true.size() ? config.beta_true : default_beta(grid);
  Vector y = dgp_response(W, grid, X, beta, eps, config.rho, config.lambda);
  return {std::move(y), std::move(X)};
}

}  // namespace detail

// Draws one replication of the scenario (lattice W with M = W, Brownian
// curves, Gaussian noise) and returns (y, X). Deterministic in rep_seed.
inline std::pair<Vector, CurveSet> generate_dgp(const ScenarioConfig& config,
                                                std::uint64_t rep_seed) {
  if (config.rows * config.cols < 4)
    throw Error("generate_dgp: lattice too small");
  if (!(std::abs(config.rho) < 1.0 && std::abs(config.lambda) < 1.0))
    throw Error("generate_dgp: autoregressive parameters must be in (-1, 1)");
  const WeightMatrix W =
      row_normalize(build_contiguity(build_rook_grid(config.rows, config.cols)));
  return detail::draw_rep(config, rep_seed, W, std::nullopt);
}

// Runs the full scenario: per replication draw, fit, ISE; aggregates mirror
// the reported table (means of the estimates, mean of ISE). Replication j
// uses seed substream j+1 of the root seed; substream 0 is reserved for the
// fixed-X draw, so serial and parallel schedules agree. Failed replications
// are recorded and excluded from the aggregates.
inline SimulationReport run_scenario(const ScenarioConfig& config) {
  if (config.n_reps < 1) throw Error("run_scenario: need n_reps >= 1");
  if (!(std::abs(config.rho) < 1.0 && std::abs(config.lambda) < 1.0))
    throw Error("run_scenario: autoregressive parameters must be in (-1, 1)");
  if (config.grid_size < 3) throw Error("run_scenario: grid_size must be >= 3");

  const Grid grid = config.grid();
  const WeightMatrix W =
      row_normalize(build_contiguity(build_rook_grid(config.rows, config.cols)));

  SimulationReport report;
  report.config = config;
  report.beta_true =
      config.beta_true.size() ? config.beta_true : default_beta(grid);

  std::optional<CurveSet> x_fixed;
  if (config.fixed_x)
    x_fixed = simulate_brownian(W.n(), grid, split_seed(config.seed, 0));

  for (int j = 0; j < config.n_reps; ++j) {
    const std::uint64_t rep_seed = split_seed(config.seed, j + 1);
    try {
      auto [y, X] = detail::draw_rep(config, rep_seed, W, x_fixed);
      FsacFit fit_result;
      if (config.fixed_k > 0) {
        FplsBasis basis = fpls_fit(X, y, config.fixed_k);
        FsacSpec spec{y, basis.scores, W, W, std::move(basis)};
        fit_result = fit(spec);
      } else {
        fit_result = select_k(y, X, W, W, config.k_max);
      }
      const double rep_ise = ise(fit_result.beta_fn, report.beta_true, grid);
      report.reps.push_back(RepRecord{j, fit_result.rho_hat,
                                      fit_result.lambda_hat,
                                      fit_result.sigma2_hat, rep_ise,
                                      fit_result.K});
      if (config.keep_beta) report.beta_curves.push_back(fit_result.beta_fn);
    } catch (const Error&) {
      report.failed_reps.push_back(j);
    }
  }

  const auto n_ok = static_cast<double>(report.reps.size());
  if (n_ok > 0) {
    for (const auto& r : report.reps) {
      report.mean_rho += r.rho_hat / n_ok;
      report.mean_lambda += r.lambda_hat / n_ok;
      report.mean_sigma2 += r.sigma2_hat / n_ok;
      report.mise += r.ise / n_ok;
    }
  }
  return report;
}

}  // namespace fsac
