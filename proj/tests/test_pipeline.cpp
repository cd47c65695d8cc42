#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "artbg/pipeline.hpp"

using namespace artbg;

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("artbg_test_pipeline_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig quick(const fs::path& out) {
  RunConfig cfg = load_run_config(std::string(ARTBG_CONFIG_DIR) + "/quick.cfg");
  cfg.out_dir = out.string();
  return cfg;
}

std::string value_of(const KeyValues& kv, const std::string& key) {
  for (const auto& [k, v] : kv)
    if (k == key) return v;
  return "";
}

}  // namespace

TEST_CASE("quick run is complete and reproducible", "[pipeline]") {
  const TempDir a("a"), b("b");
  RunConfig ca = quick(a.path);
  RunConfig cb = quick(b.path);
  cb.jobs = 3;
  const auto ra = run_pipeline(ca);
  const auto rb = run_pipeline(cb);
  REQUIRE(ra.ok);
  REQUIRE(rb.ok);
  CHECK(slurp(ra.manifest) == slurp(rb.manifest));

  const RunPaths paths{a.path};
  for (const auto& f : {paths.curve(), paths.peaks(), paths.spectrum(), paths.report(), paths.verify(),
                        paths.warnings(), paths.data(0), paths.background(10)})
    CHECK(fs::exists(f));
  CHECK_FALSE(fs::exists(paths.data(11)));

  const auto manifest = read_key_values(ra.manifest.string());
  CHECK(value_of(manifest, "status") == "ok");
  CHECK(value_of(manifest, "param.noise") == "0.01");
  CHECK(value_of(manifest, "sha256.peaks.txt") == sha256_file(paths.peaks().string()));
  CHECK(value_of(manifest, "param.jobs").empty());

  const auto report = read_key_values(paths.report().string());
  const double n = parse_double(value_of(report, "index_estimate")).value();
  CHECK(std::abs(n - 2.0) < 0.1);
}

TEST_CASE("stage-by-stage run matches the one-shot run", "[pipeline]") {
  const TempDir a("full"), b("staged");
  const auto full = run_pipeline(quick(a.path));
  REQUIRE(full.ok);
  const RunConfig cfg = quick(b.path);
  for (const auto& stage : stage_names()) {
    const auto r = run_stages(cfg, {stage});
    INFO(stage);
    REQUIRE(r.ok);
  }
  const RunPaths pa{a.path}, pb{b.path};
  for (const auto& [x, y] : {std::pair{pa.curve(), pb.curve()}, std::pair{pa.peaks(), pb.peaks()},
                             std::pair{pa.spectrum(), pb.spectrum()}, std::pair{pa.report(), pb.report()},
                             std::pair{pa.data(3), pb.data(3)}})
    CHECK(slurp(x) == slurp(y));
}

TEST_CASE("configuration errors", "[pipeline]") {
  CHECK_THROWS_AS(run_config_from(Config::parse_string("[wavenumbers]\nmin = 2\n")), ParseError);
  CHECK_THROWS_AS(run_config_from(Config::parse_string("[medium]\npiece = 2 disk 0 0 1\n[bogus]\nx = 1\n")),
                  ParseError);
  try {
    run_config_from(Config::parse_string("[medium]\npiece = 2 disk 0 0 1\n[wavenumbers]\nmni = 2\n"));
    FAIL("misspelled key accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  CHECK_THROWS_AS(
      run_config_from(Config::parse_string("[medium]\npiece = 2 disk 0 0 1\n[wavenumbers]\nmin = 3\nmax = 2\n")),
      InvalidArgument);
  CHECK_THROWS_AS(run_config_from(Config::parse_string("[medium]\npiece = 2 disk 0 0 1\n[background]\ntype = foam\n")),
                  ParseError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/run.cfg"), InvalidArgument);
  CHECK_THROWS_AS(run_stages(RunConfig{}, {"simulate"}), InvalidArgument);
}

TEST_CASE("a failing stage stops the run and is recorded", "[pipeline]") {
  const TempDir t("fail");
  RunConfig cfg = quick(t.path);
  // The indicator stage reads farfield files that were never written.
  const auto r = run_stages(cfg, {"indicator", "spectrum"});
  CHECK_FALSE(r.ok);
  const auto manifest = read_key_values(r.manifest.string());
  CHECK(value_of(manifest, "stage.indicator") == "failed");
  CHECK(value_of(manifest, "stage.spectrum").empty());
  CHECK(value_of(manifest, "status") == "failed");
}

TEST_CASE("general rho backgrounds skip the spectrum", "[pipeline]") {
  const TempDir t("rho");
  RunConfig cfg = quick(t.path);
  cfg.background = GeneralRhoBackground{{{Disk{{0.0, 0.0}, 1.0}, 0.5}}};
  const auto r = run_stages(cfg, {"spectrum", "recover"});
  CHECK(r.ok);
  CHECK_FALSE(fs::exists(RunPaths{t.path}.spectrum()));
  REQUIRE(r.log.warnings.size() == 2);
  CHECK(r.log.warnings[0].find("spectrum skipped") != std::string::npos);
  CHECK(r.log.warnings[1].find("recover skipped") != std::string::npos);
}

TEST_CASE("obstacle backgrounds warn about n = 1 cavity eigenvalues", "[pipeline]") {
  const TempDir t("obstacle");
  RunConfig cfg = quick(t.path);
  cfg.background = ObstacleBackground{Disk{{0.0, 0.0}, 1.0}, Dirichlet{}};
  cfg.k_min = 2.3;
  cfg.k_max = 2.5;
  const auto conflicts = cavity_conflicts(cfg);
  REQUIRE(conflicts.size() == 1);
  CHECK(std::abs(conflicts[0] - bessel_j_zero(0, 1)) < 1e-9);

  const auto r = run_stages(cfg, {"spectrum"});
  CHECK(r.ok);
  REQUIRE(r.log.warnings.size() == 1);
  CHECK(r.log.warnings[0].find("cavity eigenvalue") != std::string::npos);
  const auto spec = read_spectrum(RunPaths{t.path}.spectrum().string());
  CHECK(spec.kind == SpectrumKind::kCavity);

  cfg.k_min = 2.6;
  cfg.k_max = 2.9;
  CHECK(cavity_conflicts(cfg).empty());
}
