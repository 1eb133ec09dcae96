#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "helpers.hpp"

#include "canopyflux/csv.hpp"

using namespace canopyflux;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = CANOPYFLUX_FIXTURES;

int run(const std::string& args) {
  const std::string cmd = std::string(CANOPYFLUX_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string site_config(const std::string& extra = "") {
  return "[site]\nid = demo\n[allometry]\nalpha = 0.5\nbeta = 2.1\n"
         "[model]\nn_trees = 30\nfolds = 3\nrepeats = 2\nmtry_grid = 2, 5\nseed = 4\n" +
         extra + "[synth]\nn_weeks = 16\nn_trees = 4\n";
}

fs::path write_config(const testing::TempDir& dir, const std::string& text) {
  const auto path = dir / "site.cfg";
  write_text_file(path, text);
  return path;
}

bool same_file(const fs::path& a, const fs::path& b) { return read_text_file(a) == read_text_file(b); }

}  // namespace

TEST_CASE("pipeline and staged runs produce identical artifacts") {
  testing::TempDir dir("cli_pipeline");
  const auto cfg = write_config(dir, site_config()).string();
  REQUIRE(run("synth --config " + cfg) == 0);
  for (const char* f : {"sapflow.csv", "inventory.csv", "s2_samples.csv", "meteo.csv", "truth.json"}) {
    CHECK(fs::exists(dir / f));
  }

  REQUIRE(run("pipeline --config " + cfg + " --out-dir " + (dir / "a").string()) == 0);
  const std::string staged = " --config " + cfg + " --out-dir " + (dir / "b").string();
  for (const char* stage : {"ingest", "features", "train", "report", "plot"}) {
    CAPTURE(stage);
    REQUIRE(run(std::string(stage) + staged) == 0);
  }
  for (const char* f : {"transpiration_weekly.csv", "spectra_weekly.csv", "meteo_weekly.csv", "features_demo_s2.csv",
                        "features_demo_s2_meteo.csv", "cv_demo_s2.json", "cv_demo_s2_meteo.json",
                        "forest_demo_s2.json", "report.json", "report.txt", "transpiration_demo.svg"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(dir / "a" / f));
    CHECK(same_file(dir / "a" / f, dir / "b" / f));
  }
  for (const char* stage : {"ingest", "features", "train", "report", "plot"}) {
    CHECK(fs::exists(dir / "a" / (std::string("manifest_") + stage + ".json")));
  }

  // Rerunning report over the same results is byte-identical.
  const auto before = read_text_file(dir / "a" / "report.json");
  REQUIRE(run("report --config " + cfg + " --out-dir " + (dir / "a").string()) == 0);
  CHECK(read_text_file(dir / "a" / "report.json") == before);

  // Thread count does not change results.
  REQUIRE(run("pipeline --threads 3 --config " + cfg + " --out-dir " + (dir / "c").string()) == 0);
  CHECK(same_file(dir / "a" / "report.json", dir / "c" / "report.json"));

  // A different seed changes them.
  REQUIRE(run("pipeline --seed 99 --config " + cfg + " --out-dir " + (dir / "d").string()) == 0);
  CHECK_FALSE(same_file(dir / "a" / "cv_demo_s2.json", dir / "d" / "cv_demo_s2.json"));

  REQUIRE(run("plot --config " + cfg + " --out-dir " + (dir / "a").string() + " --output " +
              (dir / "custom.svg").string()) == 0);
  CHECK(same_file(dir / "custom.svg", dir / "a" / "transpiration_demo.svg"));
}

TEST_CASE("meteo requirements follow the feature sets") {
  testing::TempDir dir("cli_meteo");
  auto cfg = write_config(dir, site_config()).string();
  REQUIRE(run("synth --config " + cfg) == 0);
  fs::remove(dir / "meteo.csv");
  CHECK(run("ingest --config " + cfg) == 3);

  cfg = write_config(dir, site_config("feature_set = S2\n")).string();
  CHECK(run("pipeline --config " + cfg) == 0);
  CHECK(fs::exists(dir / "out" / "cv_demo_s2.json"));
  CHECK_FALSE(fs::exists(dir / "out" / "meteo_weekly.csv"));
}

TEST_CASE("features without overlapping weeks exit with a data error") {
  testing::TempDir dir("cli_overlap");
  const auto cfg = write_config(dir, site_config("feature_set = S2\n")).string();
  REQUIRE(run("synth --config " + cfg) == 0);
  REQUIRE(run("ingest --config " + cfg) == 0);
  write_text_file(dir / "out" / "spectra_weekly.csv",
                  "iso_week,B1,B2,B3,B4,B5,B6,B7,B8,B8A,B9,B11,B12,n_obs\n"
                  "2019-W05,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,2\n");
  CHECK(run("features --config " + cfg) == 3);
}

TEST_CASE("train on a hand-written feature table") {
  testing::TempDir dir("cli_train");
  const auto cfg = write_config(dir, site_config("feature_set = S2\n")).string();
  fs::create_directories(dir / "out");
  fs::copy_file(kFixtures / "features_hand_s2.csv", dir / "out" / "features_demo_s2.csv");
  REQUIRE(run("train --config " + cfg) == 0);
  const auto result = nlohmann::json::parse(read_text_file(dir / "out" / "cv_demo_s2.json"));
  CHECK(result["n_rows"] == 10);
  CHECK(result["importance"].size() == 12);
  CHECK(result["importance"][0]["scaled"] == 100.0);
  REQUIRE(run("report --config " + cfg) == 0);
  CHECK(read_text_file(dir / "out" / "report.txt").find("demo") != std::string::npos);
}

TEST_CASE("exit codes") {
  testing::TempDir dir("cli_codes");
  CHECK(run("") == 2);
  CHECK(run("ingest") == 2);
  CHECK(run("frobnicate --config x") == 2);
  CHECK(run("ingest --config " + (dir / "missing.cfg").string()) == 2);

  auto cfg = write_config(dir, site_config() + "[model]\nbogus = 1\n").string();
  CHECK(run("ingest --config " + cfg) == 2);

  cfg = write_config(dir, site_config()).string();
  CHECK(run("ingest --config " + cfg) == 3);  // no input files yet
  CHECK(run("report --config " + cfg) == 3);  // nothing to report

  REQUIRE(run("synth --config " + cfg) == 0);
  std::ofstream(dir / "sapflow.csv", std::ios::app) << "T01,2030-01-01T00:00:00Z,-1\n";
  CHECK(run("ingest --config " + cfg) == 3);

  CHECK(run("--version") == 0);
  CHECK(run("--help") == 0);
}
