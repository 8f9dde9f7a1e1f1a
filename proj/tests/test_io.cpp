#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <string>

#include "fsac/io.hpp"

using fsac::Matrix;
using fsac::Vector;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fsac_io_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("edge list parsing with comments and header") {
  TempDir dir;
  const std::string path = dir.file("w.txt");
  fsac::write_text(path,
                   "# path graph on three units\n"
                   "n 3\n"
                   "1 2  # first edge\n"
                   "\n"
                   "2 3\n");
  const fsac::Adjacency adj = fsac::load_edge_list(path);
  CHECK(adj.n() == 3);
  CHECK(adj.edges() ==
        std::vector<std::pair<int, int>>{{1, 2}, {2, 3}});
}

TEST_CASE("edge list errors name the file and line") {
  TempDir dir;
  const std::string path = dir.file("bad.txt");

  fsac::write_text(path, "1 2\n");
  CHECK_THROWS_WITH_AS(fsac::load_edge_list(path),
                       doctest::Contains("expected header"),
                       fsac::ParseError);

  fsac::write_text(path, "n 3\n1 9\n");
  try {
    fsac::load_edge_list(path);
    FAIL("expected ParseError");
  } catch (const fsac::ParseError& e) {
    CHECK(std::string(e.what()).find(path + ":2") != std::string::npos);
  }

  fsac::write_text(path, "n 3\n2 2\n");
  CHECK_THROWS_AS(fsac::load_edge_list(path), fsac::ParseError);

  CHECK_THROWS_AS(fsac::load_edge_list(dir.file("missing.txt")),
                  fsac::ParseError);
}

TEST_CASE("dense weight matrix csv") {
  TempDir dir;
  const std::string path = dir.file("w.csv");
  fsac::write_text(path, "0,1,0\n0.5,0,0.5\n0,1,0\n");
  const fsac::WeightMatrix w = fsac::load_dense_weights_csv(path, true);
  CHECK(w.n() == 3);
  CHECK(w.values(1, 0) == 0.5);

  fsac::write_text(path, "0.2,1\n1,0\n");
  CHECK_THROWS_WITH_AS(fsac::load_dense_weights_csv(path),
                       doctest::Contains("diagonal"), fsac::ParseError);

  fsac::write_text(path, "0,2\n2,0\n");
  CHECK_THROWS_AS(fsac::load_dense_weights_csv(path, true), fsac::ParseError);
  CHECK_NOTHROW(fsac::load_dense_weights_csv(path, false));

  fsac::write_text(path, "0,1\n1,0,3\n");
  CHECK_THROWS_WITH_AS(fsac::load_dense_weights_csv(path),
                       doctest::Contains("ragged"), fsac::ParseError);
}

TEST_CASE("weight loader dispatches on the extension") {
  TempDir dir;
  fsac::write_text(dir.file("w.csv"), "0,1\n1,0\n");
  fsac::write_text(dir.file("w.txt"), "n 2\n1 2\n");
  CHECK(fsac::load_weights_auto(dir.file("w.csv")).n() == 2);
  CHECK(fsac::load_weights_auto(dir.file("w.txt")).n() == 2);
}

TEST_CASE("curves and response round-trip through csv") {
  TempDir dir;
  const fsac::Grid grid = fsac::Grid::equispaced(0.0, 1.0, 21);
  const fsac::CurveSet curves = fsac::simulate_brownian(4, grid, 3);

  const std::string cpath = dir.file("curves.csv");
  fsac::write_text(cpath, fsac::curves_to_csv(curves));
  const fsac::CurveSet loaded = fsac::load_curves_csv(cpath);
  CHECK(loaded.grid == curves.grid);
  CHECK(loaded.values == curves.values);  // %.17g round-trips exactly

  Vector y(4);
  y << 1.5, -2.25, 0.0, 3.125;
  const std::string ypath = dir.file("y.csv");
  fsac::write_text(ypath, fsac::response_to_csv(y));
  CHECK(fsac::load_response_csv(ypath) == y);
}

TEST_CASE("curve csv validation") {
  TempDir dir;
  const std::string path = dir.file("c.csv");
  fsac::write_text(path, "0,0.5,1\n1,2\n");
  CHECK_THROWS_WITH_AS(fsac::load_curves_csv(path),
                       doctest::Contains("length"), fsac::ParseError);
  fsac::write_text(path, "0,0.5,1\n");
  CHECK_THROWS_WITH_AS(fsac::load_curves_csv(path),
                       doctest::Contains("no curves"), fsac::ParseError);
  fsac::write_text(path, "0,0.5,1\n1,abc,3\n");
  CHECK_THROWS_AS(fsac::load_curves_csv(path), fsac::ParseError);
}

TEST_CASE("basis export carries the grid and weight functions") {
  const fsac::Grid grid = fsac::Grid::equispaced(0.0, 1.0, 31);
  const fsac::CurveSet X = fsac::simulate_brownian(20, grid, 17);
  fsac::Rng rng(18);
  Vector y(20);
  for (int i = 0; i < 20; ++i)
    y[i] = X.values(i, 15) + 0.1 * rng.gaussian();
  const fsac::FplsBasis basis = fsac::fpls_fit(X, y, 3);

  const std::string csv = fsac::basis_to_csv(basis);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // grid + 3 rows

  const fsac::json meta = fsac::basis_metadata_json(basis);
  CHECK(meta["K"] == 3);
  CHECK(meta["grid_size"] == 31);
  CHECK(meta["centered"] == false);
  CHECK(meta.contains("sign_convention"));
}

TEST_CASE("report json carries the schema fields") {
  fsac::ScenarioConfig cfg;
  cfg.rho = 0.2;
  cfg.lambda = 0.1;
  cfg.rows = 4;
  cfg.cols = 4;
  cfg.grid_size = 21;
  cfg.n_reps = 2;
  cfg.fixed_k = 1;
  cfg.seed = 3;
  const auto report = fsac::run_scenario(cfg);
  const fsac::json j = fsac::report_to_json(report);
  CHECK(j["config"]["rho"] == 0.2);
  CHECK(j["config"]["fixed_k"] == 1);
  CHECK(j["replications"].size() == 2);
  CHECK(j["failure_count"] == 0);
  CHECK(j["means"].contains("rho_hat"));
  CHECK(j.contains("mise"));

  const std::string csv = fsac::report_to_csv(report);
  CHECK(csv.rfind("rep,rho_hat", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("manifest serialization and file digests") {
  TempDir dir;
  const std::string path = dir.file("data.bin");
  fsac::write_text(path, "payload");
  const std::string d1 = fsac::file_digest(path);
  CHECK(d1 == fsac::file_digest(path));
  fsac::write_text(path, "payload2");
  CHECK(d1 != fsac::file_digest(path));

  fsac::RunManifest manifest;
  manifest.subcommand = "fit";
  manifest.options = {{"alpha", 0.05}};
  manifest.input_digests[path] = d1;
  manifest.outputs = {"out.json"};
  manifest.seed = 42;
  const fsac::json j = fsac::manifest_to_json(manifest);
  CHECK(j["subcommand"] == "fit");
  CHECK(j["inputs"][path] == d1);
  CHECK(j["seed"] == 42);
}

TEST_CASE("fit json includes estimates, optimizer trace, and bands") {
  const fsac::Grid grid = fsac::Grid::equispaced(0.0, 1.0, 31);
  const fsac::WeightMatrix w = fsac::row_normalize(
      fsac::build_contiguity(fsac::build_rook_grid(5, 5)));
  const fsac::CurveSet X = fsac::simulate_brownian(25, grid, 44);
  fsac::Rng rng(45);
  Vector y(25);
  const Vector beta = fsac::default_beta(grid);
  for (int i = 0; i < 25; ++i)
    y[i] = fsac::inner_product(X.values.row(i), beta, grid) + rng.gaussian();
  fsac::FplsBasis basis = fsac::fpls_fit(X, y, 2);
  const fsac::FsacSpec spec{y, basis.scores, w, w, basis};
  const fsac::FsacFit fit = fsac::fit(spec);

  fsac::json j = fsac::fit_to_json(fit);
  CHECK(j["K"] == 2);
  CHECK(j["beta_coefs"].size() == 2);
  CHECK(j["beta_fn"].size() == 31);
  CHECK(j["optimizer"].contains("grid_loglik"));
  CHECK(j["optimizer"]["converged"] == true);

  j["band"] = fsac::band_to_json(fsac::confidence_band(fit, 0.05));
  CHECK(j["band"]["lower"].size() == 31);
  CHECK(j["band"]["multiplier"] == doctest::Approx(1.959964).epsilon(1e-6));

  // serialization of the same fit is stable
  CHECK(fsac::fit_to_json(fit).dump() == fsac::fit_to_json(fit).dump());
}
