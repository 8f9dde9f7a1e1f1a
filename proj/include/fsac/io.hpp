#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fsac/estimation.hpp"
#include "fsac/fpls.hpp"
#include "fsac/functional_data.hpp"
#include "fsac/moran.hpp"
#include "fsac/simulation.hpp"
#include "fsac/spatial_weights.hpp"

namespace fsac {

using json = nlohmann::json;

namespace detail {

inline std::string location(const std::string& path, int line) {
  return path + ":" + std::to_string(line);
}

inline std::vector<double> parse_number_row(const std::string& text,
                                            const std::string& path,
                                            int line_no) {
  std::vector<double> row;
  std::string cell;
  std::istringstream stream(text);
  while (std::getline(stream, cell, ',')) {
    try {
      std::size_t used = 0;
      const double value = std::stod(cell, &used);
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
        ++used;
      if (used != cell.size()) throw std::invalid_argument(cell);
      row.push_back(value);
    } catch (const std::exception&) {
      throw ParseError(location(path, line_no) + ": expected a number, got '" +
                       cell + "'");
    }
  }
  if (row.empty())
    throw ParseError(location(path, line_no) + ": empty row");
  return row;
}

inline std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return in;
}

}  // namespace detail

// Edge-list format: optional '#' comments, a header line `n <count>`, then
// one 1-based `i j` pair per line.
inline Adjacency load_edge_list(const std::string& path) {
  auto in = detail::open_or_throw(path);
  std::string line;
  int line_no = 0;
  int n = -1;
  std::vector<std::pair<int, int>> edges;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream stream(line);
    std::string first;
    if (!(stream >> first)) continue;  // blank or comment-only line
    if (n < 0) {
      int count = 0;
      if (first != "n" || !(stream >> count) || count < 1)
        throw ParseError(detail::location(path, line_no) +
                         ": expected header 'n <count>'");
      n = count;
      continue;
    }
    int i = 0, j = 0;
    try {
      i = std::stoi(first);
    } catch (const std::exception&) {
      throw ParseError(detail::location(path, line_no) +
                       ": expected an edge 'i j'");
    }
    if (!(stream >> j))
      throw ParseError(detail::location(path, line_no) +
                       ": expected an edge 'i j'");
    if (i < 1 || j < 1 || i > n || j > n)
      throw ParseError(detail::location(path, line_no) + ": edge (" +
                       std::to_string(i) + "," + std::to_string(j) +
                       ") outside 1.." + std::to_string(n));
    if (i == j)
      throw ParseError(detail::location(path, line_no) + ": self-loop");
    edges.emplace_back(i, j);
  }
  if (n < 0) throw ParseError(path + ": missing header 'n <count>'");
  if (edges.empty()) throw ParseError(path + ": no edges");
  return Adjacency(n, std::move(edges));
}

// Dense CSV weight matrix: n rows of n comma-separated reals, no header.
// The diagonal must be zero; with `require_row_normalized` each nonzero row
// must already sum to one.
inline WeightMatrix load_dense_weights_csv(const std::string& path,
                                           bool require_row_normalized = false) {
  auto in = detail::open_or_throw(path);
  std::string line;
  int line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(detail::parse_number_row(line, path, line_no));
    if (rows.back().size() != rows.front().size())
      throw ParseError(detail::location(path, line_no) +
                       ": ragged row in weight matrix");
  }
  const int n = static_cast<int>(rows.size());
  if (n < 2 || static_cast<int>(rows.front().size()) != n)
    throw ParseError(path + ": weight matrix must be square with n >= 2");

  WeightMatrix w;
  w.values = Matrix(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w.values(i, j) = rows[i][j];

  if (w.values.diagonal().cwiseAbs().maxCoeff() > 1e-12)
    throw ParseError(path + ": weight matrix diagonal must be zero");
  if ((w.values.array() < 0.0).any())
    throw ParseError(path + ": weight matrix entries must be nonnegative");
  if (require_row_normalized) {
    for (int i = 0; i < n; ++i) {
      const double s = w.values.row(i).sum();
      if (s > 0.0 && std::abs(s - 1.0) > 1e-8)
        throw ParseError(path + ": row " + std::to_string(i + 1) +
                         " sums to " + std::to_string(s) + ", expected 1");
    }
  }
  return w;
}

// Weight file dispatch: .csv reads the dense matrix, anything else the edge
// list. Returns the raw (un-normalized) matrix.
inline WeightMatrix load_weights_auto(const std::string& path,
                                      bool require_row_normalized = false) {
  if (std::filesystem::path(path).extension() == ".csv")
    return load_dense_weights_csv(path, require_row_normalized);
  return build_contiguity(load_edge_list(path));
}

// Curves CSV: the first line is the grid, each following line one curve.
inline CurveSet load_curves_csv(const std::string& path) {
  auto in = detail::open_or_throw(path);
  std::string line;
  int line_no = 0;
  std::vector<double> grid_points;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto row = detail::parse_number_row(line, path, line_no);
    if (grid_points.empty()) {
      grid_points = std::move(row);
      continue;
    }
    if (row.size() != grid_points.size())
      throw ParseError(detail::location(path, line_no) +
                       ": curve length does not match the grid");
    rows.push_back(std::move(row));
  }
  if (grid_points.empty()) throw ParseError(path + ": missing grid line");
  if (rows.empty()) throw ParseError(path + ": no curves");
  Matrix values(rows.size(), grid_points.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < grid_points.size(); ++j)
      values(i, j) = rows[i][j];
  try {
    return CurveSet(Grid(std::move(grid_points)), std::move(values));
  } catch (const Error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// Response CSV: one real per line.
inline Vector load_response_csv(const std::string& path) {
  auto in = detail::open_or_throw(path);
  std::string line;
  int line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto row = detail::parse_number_row(line, path, line_no);
    if (row.size() != 1)
      throw ParseError(detail::location(path, line_no) +
                       ": expected one value per line");
    values.push_back(row.front());
  }
  if (values.empty()) throw ParseError(path + ": no values");
  return Eigen::Map<const Vector>(values.data(), values.size());
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace detail

inline std::string curves_to_csv(const CurveSet& curves) {
  std::ostringstream out;
  for (int j = 0; j < curves.m(); ++j)
    out << (j ? "," : "") << detail::format_double(curves.grid.points()[j]);
  out << "\n";
  for (int i = 0; i < curves.n(); ++i) {
    for (int j = 0; j < curves.m(); ++j)
      out << (j ? "," : "") << detail::format_double(curves.values(i, j));
    out << "\n";
  }
  return out.str();
}

inline std::string response_to_csv(const Vector& y) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    out << detail::format_double(y[i]) << "\n";
  return out.str();
}

inline json moran_to_json(const MoranResult& r) {
  return json{{"statistic", r.statistic},
              {"z_score", r.z_score},
              {"p_value", r.p_value},
              {"expectation", r.expectation},
              {"variance", r.variance}};
}

inline json band_to_json(const ConfidenceBand& band) {
  return json{{"alpha", band.alpha},
              {"multiplier", band.multiplier},
              {"lower", detail::vector_to_json(band.lower)},
              {"upper", detail::vector_to_json(band.upper)}};
}

inline json fit_to_json(const FsacFit& fit) {
  json j{{"rho_hat", fit.rho_hat},
         {"lambda_hat", fit.lambda_hat},
         {"sigma2_hat", fit.sigma2_hat},
         {"loglik", fit.loglik},
         {"bic", fit.bic},
         {"K", fit.K},
         {"beta_coefs", detail::vector_to_json(fit.beta_coefs)},
         {"optimizer",
          {{"grid_rho", fit.trace.grid_rho},
           {"grid_lambda", fit.trace.grid_lambda},
           {"grid_loglik", fit.trace.grid_loglik},
           {"iterations", fit.trace.iterations},
           {"evaluations", fit.trace.evaluations},
           {"path_length", fit.trace.path_length},
           {"converged", fit.trace.converged}}}};
  if (fit.beta_fn.size()) j["beta_fn"] = detail::vector_to_json(fit.beta_fn);
  if (fit.basis) {
    j["grid"] = json(fit.basis->grid.points());
  }
  if (!fit.bic_trace.empty()) j["bic_trace"] = json(fit.bic_trace);
  return j;
}

inline json config_to_json(const ScenarioConfig& config) {
  json j{{"rho", config.rho},
         {"lambda", config.lambda},
         {"n_reps", config.n_reps},
         {"seed", config.seed},
         {"rows", config.rows},
         {"cols", config.cols},
         {"grid_size", config.grid_size},
         {"fixed_x", config.fixed_x}};
  if (config.fixed_k > 0)
    j["fixed_k"] = config.fixed_k;
  else
    j["k_max"] = config.k_max;
  return j;
}

inline json report_to_json(const SimulationReport& report) {
  json reps = json::array();
  for (const auto& r : report.reps)
    reps.push_back(json{{"rep", r.rep},
                        {"rho_hat", r.rho_hat},
                        {"lambda_hat", r.lambda_hat},
                        {"sigma2_hat", r.sigma2_hat},
                        {"ise", r.ise},
                        {"K", r.K}});
  return json{{"config", config_to_json(report.config)},
              {"beta_true", detail::vector_to_json(report.beta_true)},
              {"replications", std::move(reps)},
              {"failed_replications", json(report.failed_reps)},
              {"failure_count", report.failed_reps.size()},
              {"means",
               {{"rho_hat", report.mean_rho},
                {"lambda_hat", report.mean_lambda},
                {"sigma2_hat", report.mean_sigma2}}},
              {"mise", report.mise}};
}

// Per-replication rows as CSV, one line per replication.
inline std::string report_to_csv(const SimulationReport& report) {
  std::ostringstream out;
  out << "rep,rho_hat,lambda_hat,sigma2_hat,ise,K\n";
  for (const auto& r : report.reps)
    out << r.rep << ',' << detail::format_double(r.rho_hat) << ','
        << detail::format_double(r.lambda_hat) << ','
        << detail::format_double(r.sigma2_hat) << ','
        << detail::format_double(r.ise) << ',' << r.K << "\n";
  return out.str();
}

// Basis export: one weight function per row on the grid.
inline std::string basis_to_csv(const FplsBasis& basis) {
  std::ostringstream out;
  for (int j = 0; j < basis.grid.size(); ++j)
    out << (j ? "," : "") << detail::format_double(basis.grid.points()[j]);
  out << "\n";
  for (int k = 0; k < basis.K; ++k) {
    for (int j = 0; j < basis.grid.size(); ++j)
      out << (j ? "," : "")
          << detail::format_double(basis.weight_functions(k, j));
    out << "\n";
  }
  return out.str();
}

inline json basis_metadata_json(const FplsBasis& basis) {
  return json{{"K", basis.K},
              {"grid_min", basis.grid.a()},
              {"grid_max", basis.grid.b()},
              {"grid_size", basis.grid.size()},
              {"centered", basis.centered},
              {"sign_convention",
               "positive inner product with the empirical cross-covariance"}};
}

// FNV-1a 64-bit digest of a file's bytes, reported as hex.
inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::uint64_t hash = 1469598103934665603ULL;
  char c;
  while (in.get(c)) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << hash;
  return out.str();
}

// Reproduction record written next to every command's outputs.
struct RunManifest {
  std::string subcommand;
  json options;
  std::map<std::string, std::string> input_digests;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0.0;
};

inline json manifest_to_json(const RunManifest& m) {
  return json{{"subcommand", m.subcommand},
              {"options", m.options},
              {"inputs", json(m.input_digests)},
              {"outputs", json(m.outputs)},
              {"seed", m.seed},
              {"wall_clock_seconds", m.wall_clock_seconds}};
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot open for writing");
  out << content;
  if (!out) throw Error(path + ": write failed");
}

inline std::string read_text(const std::string& path) {
  auto in = detail::open_or_throw(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace fsac
