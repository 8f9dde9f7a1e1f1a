// Command-line front-end: model fitting, spatial-autocorrelation diagnostics,
// and the Monte Carlo simulation harness.
//
// Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fsac/fsac.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

fsac::WeightMatrix load_and_normalize_weights(const std::string& path) {
  fsac::WeightMatrix raw = fsac::load_weights_auto(path);
  fsac::WeightMatrix w = fsac::row_normalize(raw);
  for (int unit : w.isolated_units)
    std::cerr << "warning: " << path << ": unit " << unit
              << " has no neighbors; its row stays zero\n";
  return w;
}

void write_manifest(fsac::RunManifest manifest, const std::string& out_path) {
  const std::string path = out_path + ".manifest.json";
  fsac::write_text(path, fsac::manifest_to_json(manifest).dump(2) + "\n");
}

struct FitArgs {
  std::string curves_path;
  std::string response_path;
  std::string weights_path;
  std::string m_weights_path;
  std::string k = "auto";
  int k_max = 6;
  double alpha = 0.05;
  std::string smoothing = "cv";
  std::string out_path;
};

int run_fit(const FitArgs& args) {
  Timer timer;

  fsac::CurveSet raw_curves = fsac::load_curves_csv(args.curves_path);
  fsac::Vector y = fsac::load_response_csv(args.response_path);
  fsac::WeightMatrix W = load_and_normalize_weights(args.weights_path);
  fsac::WeightMatrix M = args.m_weights_path.empty()
                             ? W
                             : load_and_normalize_weights(args.m_weights_path);

  if (y.size() != raw_curves.n())
    throw fsac::ParseError(args.response_path + ": " +
                           std::to_string(y.size()) + " responses for " +
                           std::to_string(raw_curves.n()) + " curves in " +
                           args.curves_path);
  if (W.n() != raw_curves.n())
    throw fsac::ParseError(args.weights_path + ": weight matrix is " +
                           std::to_string(W.n()) + "x" + std::to_string(W.n()) +
                           " but there are " + std::to_string(raw_curves.n()) +
                           " curves");
  if (M.n() != W.n())
    throw fsac::ParseError(args.m_weights_path +
                           ": disturbance weight matrix size differs from W");

  int k_fixed = 0;
  if (args.k != "auto") {
    try {
      k_fixed = std::stoi(args.k);
    } catch (const std::exception&) {
      throw fsac::ParseError("--k must be a positive integer or 'auto'");
    }
    if (k_fixed < 1) throw fsac::ParseError("--k must be >= 1");
  }

  // smoothing stage
  fsac::json smoothing_info;
  std::optional<fsac::CurveSet> smoothed;
  if (args.smoothing == "none") {
    smoothing_info = {{"mode", "none"}};
  } else {
    int n_basis = 0;
    if (args.smoothing == "cv") {
      std::vector<int> candidates;
      for (int b = 4; b <= std::min(12, raw_curves.m()); ++b)
        candidates.push_back(b);
      if (candidates.empty())
        throw fsac::ParseError(args.curves_path +
                               ": too few grid points for spline smoothing");
      n_basis =
          fsac::cv_select_nbasis(raw_curves.values, raw_curves.grid, candidates);
      smoothing_info = {{"mode", "cv"}, {"n_basis", n_basis}};
    } else {
      try {
        n_basis = std::stoi(args.smoothing);
      } catch (const std::exception&) {
        throw fsac::ParseError("--smoothing must be an integer, 'cv', or 'none'");
      }
      smoothing_info = {{"mode", "fixed"}, {"n_basis", n_basis}};
    }
    try {
      smoothed =
          fsac::smooth_curves(raw_curves.values, raw_curves.grid, n_basis);
    } catch (const fsac::InvalidBasisCount& e) {
      throw fsac::ParseError(e.what());
    } catch (const fsac::RankDeficientDesign& e) {
      throw fsac::ParseError(e.what());
    }
  }
  const fsac::CurveSet& X = smoothed ? *smoothed : raw_curves;

  fsac::FsacFit fit_result;
  if (k_fixed > 0) {
    fsac::FplsBasis basis = fsac::fpls_fit(X, y, k_fixed);
    fsac::FsacSpec spec{y, basis.scores, W, M, std::move(basis)};
    fit_result = fsac::fit(spec);
  } else {
    const int k_cap = std::min(X.n() - 1, X.m());
    fit_result = fsac::select_k(y, X, W, M, std::min(args.k_max, k_cap));
  }
  const fsac::ConfidenceBand band =
      fsac::confidence_band(fit_result, args.alpha);

  fsac::json j = fsac::fit_to_json(fit_result);
  j["band"] = fsac::band_to_json(band);
  j["smoothing"] = smoothing_info;
  j["moran"] = fsac::json::object();
  j["moran"]["response"] = fsac::moran_to_json(fsac::morans_i(y, W));
  // whitened residuals (I - lambda M)((I - rho W) y - Z beta)
  {
    const fsac::Vector ay = y - fit_result.rho_hat * (W.values * y);
    const fsac::Vector u = ay - fit_result.basis->scores * fit_result.beta_coefs;
    const fsac::Vector eps = u - fit_result.lambda_hat * (M.values * u);
    try {
      j["moran"]["residuals"] = fsac::moran_to_json(fsac::morans_i(eps, W));
    } catch (const fsac::ConstantInput&) {
      j["moran"]["residuals"] = nullptr;
    }
  }
  fsac::write_text(args.out_path, j.dump(2) + "\n");

  fsac::RunManifest manifest;
  manifest.subcommand = "fit";
  manifest.options = {{"curves", args.curves_path},
                      {"response", args.response_path},
                      {"weights", args.weights_path},
                      {"m_weights", args.m_weights_path},
                      {"k", args.k},
                      {"k_max", args.k_max},
                      {"alpha", args.alpha},
                      {"smoothing", args.smoothing},
                      {"out", args.out_path}};
  manifest.input_digests[args.curves_path] = fsac::file_digest(args.curves_path);
  manifest.input_digests[args.response_path] =
      fsac::file_digest(args.response_path);
  manifest.input_digests[args.weights_path] =
      fsac::file_digest(args.weights_path);
  if (!args.m_weights_path.empty())
    manifest.input_digests[args.m_weights_path] =
        fsac::file_digest(args.m_weights_path);
  manifest.outputs = {args.out_path};
  manifest.wall_clock_seconds = timer.seconds();
  write_manifest(manifest, args.out_path);

  std::printf("fit: n=%d K=%d rho_hat=%.4f lambda_hat=%.4f sigma2_hat=%.4f loglik=%.4f bic=%.4f\n",
              static_cast<int>(y.size()), fit_result.K, fit_result.rho_hat,
              fit_result.lambda_hat, fit_result.sigma2_hat, fit_result.loglik,
              fit_result.bic);
  return kExitOk;
}

struct SimulateArgs {
  double rho = 0.0;
  double lambda = 0.0;
  int reps = 0;
  int rows = 11;
  int cols = 11;
  int grid_size = 101;
  std::uint64_t seed = 0;
  int k_max = 6;
  bool fixed_x = false;
  std::string out_path;
  std::string csv_path;
};

int run_simulate(const SimulateArgs& args) {
  Timer timer;

  fsac::ScenarioConfig config;
  config.rho = args.rho;
  config.lambda = args.lambda;
  config.n_reps = args.reps;
  config.rows = args.rows;
  config.cols = args.cols;
  config.grid_size = args.grid_size;
  config.seed = args.seed;
  config.k_max = args.k_max;
  config.fixed_x = args.fixed_x;

  const fsac::SimulationReport report = fsac::run_scenario(config);
  fsac::write_text(args.out_path, fsac::report_to_json(report).dump(2) + "\n");
  if (!args.csv_path.empty())
    fsac::write_text(args.csv_path, fsac::report_to_csv(report));

  fsac::RunManifest manifest;
  manifest.subcommand = "simulate";
  manifest.options = {{"rho", args.rho},     {"lambda", args.lambda},
                      {"reps", args.reps},   {"rows", args.rows},
                      {"cols", args.cols},   {"grid_size", args.grid_size},
                      {"k_max", args.k_max}, {"fixed_x", args.fixed_x},
                      {"out", args.out_path}};
  manifest.outputs = {args.out_path};
  if (!args.csv_path.empty()) manifest.outputs.push_back(args.csv_path);
  manifest.seed = args.seed;
  manifest.wall_clock_seconds = timer.seconds();
  write_manifest(manifest, args.out_path);

  std::printf(
      "simulate: rho=%.2f lambda=%.2f rho_hat=%.4f lambda_hat=%.4f "
      "sigma2_hat=%.4f mise=%.4f (reps=%zu failures=%zu)\n",
      args.rho, args.lambda, report.mean_rho, report.mean_lambda,
      report.mean_sigma2, report.mise, report.reps.size(),
      report.failed_reps.size());
  return kExitOk;
}

struct MoranArgs {
  std::string values_path;
  std::string weights_path;
  std::string out_path;
};

int run_moran(const MoranArgs& args) {
  Timer timer;
  const fsac::Vector values = fsac::load_response_csv(args.values_path);
  const fsac::WeightMatrix W = load_and_normalize_weights(args.weights_path);
  if (W.n() != values.size())
    throw fsac::ParseError(args.weights_path + ": weight matrix is " +
                           std::to_string(W.n()) + "x" + std::to_string(W.n()) +
                           " but " + args.values_path + " has " +
                           std::to_string(values.size()) + " values");

  fsac::MoranResult result;
  try {
    result = fsac::morans_i(values, W);
  } catch (const fsac::ConstantInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  std::printf("moran: I=%.6f z=%.4f p=%.6g\n", result.statistic, result.z_score,
              result.p_value);

  if (!args.out_path.empty()) {
    fsac::write_text(args.out_path,
                     fsac::moran_to_json(result).dump(2) + "\n");
    fsac::RunManifest manifest;
    manifest.subcommand = "moran";
    manifest.options = {{"values", args.values_path},
                        {"weights", args.weights_path},
                        {"out", args.out_path}};
    manifest.input_digests[args.values_path] =
        fsac::file_digest(args.values_path);
    manifest.input_digests[args.weights_path] =
        fsac::file_digest(args.weights_path);
    manifest.outputs = {args.out_path};
    manifest.wall_clock_seconds = timer.seconds();
    write_manifest(manifest, args.out_path);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "fsac: maximum-likelihood estimation of the functional spatial "
      "autoregressive combined model"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand(
      "fit", "Fit the model to curves, a scalar response, and spatial weights");
  fit_cmd->add_option("--curves", fit_args.curves_path,
                      "Curves CSV: grid line, then one curve per line")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--response", fit_args.response_path,
                      "Response CSV: one value per line")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--weights", fit_args.weights_path,
                      "Spatial weights for the response lag: edge list, or "
                      "dense CSV when the extension is .csv")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--m-weights", fit_args.m_weights_path,
                      "Weights for the disturbance lag (default: same as "
                      "--weights)")
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--k", fit_args.k,
                      "Number of basis functions, or 'auto' for a BIC scan");
  fit_cmd->add_option("--k-max", fit_args.k_max,
                      "Upper bound of the BIC scan when --k auto")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--alpha", fit_args.alpha,
                      "Confidence band level is 100(1-alpha)%")
      ->check(CLI::Range(1e-12, 0.9999999));
  fit_cmd->add_option("--smoothing", fit_args.smoothing,
                      "B-spline smoothing of the raw curves: a basis count, "
                      "'cv' to pick it by cross-validation, or 'none'");
  fit_cmd->add_option("--out", fit_args.out_path, "Output JSON path")
      ->required();

  SimulateArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand(
      "simulate", "Monte Carlo study on a rook lattice: generate, fit, report");
  sim_cmd->add_option("--rho", sim_args.rho, "Response-lag parameter")
      ->required()
      ->check(CLI::Range(-0.9999, 0.9999));
  sim_cmd->add_option("--lambda", sim_args.lambda, "Disturbance-lag parameter")
      ->required()
      ->check(CLI::Range(-0.9999, 0.9999));
  sim_cmd->add_option("--reps", sim_args.reps, "Number of replications")
      ->required()
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--rows", sim_args.rows, "Lattice rows")
      ->check(CLI::Range(2, 1000));
  sim_cmd->add_option("--cols", sim_args.cols, "Lattice columns")
      ->check(CLI::Range(2, 1000));
  sim_cmd->add_option("--grid-size", sim_args.grid_size,
                      "Number of grid points on [0,1]")
      ->check(CLI::Range(3, 100000));
  sim_cmd->add_option("--seed", sim_args.seed, "Root seed");
  sim_cmd->add_option("--k-max", sim_args.k_max, "Upper bound of the BIC scan")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_flag("--fixed-x", sim_args.fixed_x,
                    "Draw the curves once and reuse them across replications");
  sim_cmd->add_option("--out", sim_args.out_path, "Report JSON path")
      ->required();
  sim_cmd->add_option("--csv", sim_args.csv_path,
                      "Optional per-replication CSV dump");

  MoranArgs moran_args;
  CLI::App* moran_cmd = app.add_subcommand(
      "moran", "Moran's I spatial autocorrelation test of a variable");
  moran_cmd->add_option("--values", moran_args.values_path,
                        "Values CSV: one value per line")
      ->required()
      ->check(CLI::ExistingFile);
  moran_cmd->add_option("--weights", moran_args.weights_path, "Spatial weights")
      ->required()
      ->check(CLI::ExistingFile);
  moran_cmd->add_option("--out", moran_args.out_path,
                        "Optional JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit_args);
    if (sim_cmd->parsed()) return run_simulate(sim_args);
    if (moran_cmd->parsed()) return run_moran(moran_args);
  } catch (const fsac::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fsac::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitInput;
}
