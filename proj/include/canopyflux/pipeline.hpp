#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "canopyflux/config.hpp"

namespace canopyflux {

inline constexpr std::string_view kToolVersion = "0.3.0";

/// Hex SHA-256 of a byte string / file.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Artifact names inside the output directory.
struct OutputLayout {
  std::filesystem::path dir;

  std::filesystem::path weekly_transpiration() const { return dir / "transpiration_weekly.csv"; }
  std::filesystem::path daily_transpiration() const { return dir / "transpiration_daily.csv"; }
  std::filesystem::path weekly_spectra() const { return dir / "spectra_weekly.csv"; }
  std::filesystem::path weekly_meteo() const { return dir / "meteo_weekly.csv"; }
  std::filesystem::path ingest_qa() const { return dir / "ingest_qa.json"; }
  std::filesystem::path features(std::string_view site, FeatureSet set) const;
  std::filesystem::path cv_result(std::string_view site, FeatureSet set) const;
  std::filesystem::path model(std::string_view site, FeatureSet set) const;
  std::filesystem::path report_json() const { return dir / "report.json"; }
  std::filesystem::path report_text() const { return dir / "report.txt"; }
  std::filesystem::path plot(std::string_view site) const;
  std::filesystem::path manifest(std::string_view stage) const;
};

/// Files a stage read and wrote; recorded in the stage manifest.
struct StageRecord {
  std::string stage;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
};

// Each stage reads the previous stage's artifacts from the output directory.
StageRecord run_synth(const SiteConfig& config);
StageRecord run_ingest(const SiteConfig& config, unsigned threads);
StageRecord run_features(const SiteConfig& config);
StageRecord run_train(const SiteConfig& config, unsigned threads);
/// Collects every cv_*.json in the output directory; `rendered` receives the
/// plain-text tables.
StageRecord run_report(const SiteConfig& config, std::string* rendered = nullptr);
StageRecord run_plot(const SiteConfig& config, const std::filesystem::path& input = {},
                     const std::filesystem::path& output = {});

/// Writes manifest_<stage>.json: tool version, config hash, and hashes of
/// every input and output. Contains no timestamps, so reruns are identical.
void write_manifest(const SiteConfig& config, const StageRecord& record);

}  // namespace canopyflux
