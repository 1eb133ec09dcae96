#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "canopyflux/evaluation.hpp"
#include "canopyflux/features.hpp"
#include "canopyflux/forest.hpp"
#include "canopyflux/sapflow.hpp"
#include "canopyflux/synthgen.hpp"

namespace canopyflux {

/// One site's run configuration.
///
/// File format: `[section]` headers and `key = value` lines, `#` comments.
/// Every key has a default except the allometry coefficients; unknown
/// sections or keys are ConfigError. Relative paths resolve against the
/// config file's directory. Example:
///
///     [site]
///     id = site1
///     plot_radius_m = 12
///     [inputs]
///     sapflow = sapflow.csv
///     [allometry]
///     alpha = 0.5
///     beta = 2.1
struct SiteConfig {
  std::filesystem::path source;  // the config file itself

  std::string site_id = "site";
  double plot_radius = 12.0;

  std::filesystem::path sapflow_csv;
  std::filesystem::path inventory_csv;
  std::filesystem::path s2_csv;
  std::filesystem::path meteo_csv;
  std::filesystem::path out_dir;

  UpscalingParams upscaling;  // plot_radius mirrored from [site]
  double buffer_radius = 12.0;
  int meteo_min_days = 7;

  std::vector<FeatureSet> feature_sets = {FeatureSet::S2, FeatureSet::S2Meteo};
  ForestConfig forest;  // forest.seed mirrors `seed`
  CvConfig cv;          // cv.seed mirrors `seed`
  std::uint64_t seed = 20200601;
  unsigned threads = 0;

  SynthConfig synth;  // only used by the `synth` subcommand

  bool needs_meteo() const;
};

SiteConfig parse_site_config(std::string_view text, const std::filesystem::path& source);
SiteConfig load_site_config(const std::filesystem::path& path);

/// Applies a seed override to every seeded component.
void override_seed(SiteConfig& config, std::uint64_t seed);

}  // namespace canopyflux
