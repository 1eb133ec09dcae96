#include <cmath>

#include "helpers.hpp"

#include "canopyflux/csv.hpp"
#include "canopyflux/environment.hpp"
#include "canopyflux/evaluation.hpp"
#include "canopyflux/sapflow.hpp"
#include "canopyflux/synthgen.hpp"

using namespace canopyflux;
using testing::rel_err;

namespace {

SynthConfig small_config(std::uint64_t seed) {
  SynthConfig c;
  c.seed = seed;
  c.n_trees = 4;
  c.n_weeks = 8;
  return c;
}

}  // namespace

TEST_CASE("synthetic data is deterministic in the seed") {
  const auto a = generate_data(small_config(3));
  const auto b = generate_data(small_config(3));
  const auto c = generate_data(small_config(4));
  CHECK(sapflow_csv(a.sapflow) == sapflow_csv(b.sapflow));
  CHECK(s2_samples_csv(a.spectra) == s2_samples_csv(b.spectra));
  CHECK(meteo_csv(a.meteo) == meteo_csv(b.meteo));
  CHECK(sapflow_csv(a.sapflow) != sapflow_csv(c.sapflow));
  CHECK(a.truth.size() == 8);
  CHECK(a.inventory.size() == 4);
  CHECK(a.sapflow.size() == 4 * 8 * 7 * 24);
  CHECK(a.meteo.size() == 8 * 7);
}

TEST_CASE("noiseless synthetic site round-trips through the upscaling chain") {
  auto config = small_config(11);
  config.noise_sd = 0.0;
  config.n_weeks = 12;
  testing::TempDir dir("synth");
  const auto data = generate(config, dir.path());

  const auto readings = read_sapflow_csv(dir / "sapflow.csv");
  const auto inventory = read_inventory_csv(dir / "inventory.csv");
  UpscalingParams params;
  params.allometry = config.allometry;
  params.plot_radius = config.plot_radius;
  const auto result = upscale_site(readings, inventory, params, "synthetic");
  REQUIRE(result.weekly.values.size() == data.truth.size());
  for (std::size_t w = 0; w < data.truth.size(); ++w) {
    CHECK(result.weekly.values[w].week == data.truth[w].week);
    CHECK(rel_err(result.weekly.values[w].mm_day, data.truth[w].transpiration) < 1e-9);
    CHECK(data.truth[w].transpiration == std::max(config.min_transpiration, data.truth[w].clean_signal));
  }
  CHECK(result.clamped_readings == 0);

  const auto truth = nlohmann::json::parse(read_text_file(dir / "truth.json"));
  CHECK(truth["weeks"].size() == data.truth.size());
}

TEST_CASE("flagged acquisition share follows cloud_fraction") {
  auto config = small_config(5);
  config.n_trees = 1;
  config.n_weeks = 150;
  config.cloud_fraction = 0.3;
  const auto data = generate_data(config);
  const double n = static_cast<double>(data.n_acquisitions);
  const double flagged = static_cast<double>(data.n_flagged_acquisitions);
  // Two-sided 99% normal bound on a binomial count.
  CHECK(std::abs(flagged - 0.3 * n) <= 2.576 * std::sqrt(n * 0.3 * 0.7));

  // The flags in the table agree with the reported count.
  std::size_t flagged_pixels = 0;
  for (const auto& s : data.spectra) flagged_pixels += (s.cloud || s.snow) ? 1 : 0;
  CHECK(flagged_pixels == data.n_flagged_acquisitions * 9);
}

TEST_CASE("spectra carry the planted driver") {
  auto config = small_config(7);
  config.n_weeks = 40;
  config.planted_coefficients = {{"B11", -0.8}};
  config.noise_sd = 0.0;
  const auto data = generate_data(config);
  const auto weekly = weekly_bands(buffer_average(qa_filter(data.spectra), config.plot_radius));
  std::vector<double> b11, target;
  for (const auto& w : weekly) {
    for (const auto& t : data.truth) {
      if (t.week == w.week) {
        b11.push_back(w.band_means[10]);
        target.push_back(t.clean_signal);
      }
    }
  }
  REQUIRE(b11.size() > 30);
  CHECK(*metrics(target, b11).r2 > 0.9);
}

TEST_CASE("oracle r2 override") {
  auto config = small_config(9);
  config.n_weeks = 400;
  config.n_trees = 1;
  config.target_oracle_r2 = 0.85;
  const auto data = generate_data(config);
  CHECK(std::abs(data.oracle_r2 - 0.85) < 0.05);
  CHECK(data.noise_sd > 0.0);
}

TEST_CASE("synth config validation") {
  auto c = small_config(1);
  c.cloud_fraction = 1.0;
  CHECK_ERROR_KIND(generate_data(c), ErrorKind::ConfigError);
  c = small_config(1);
  c.start += std::chrono::days{1};
  CHECK_ERROR_KIND(generate_data(c), ErrorKind::ConfigError);
  c = small_config(1);
  c.planted_coefficients = {{"B10", 1.0}};
  CHECK_ERROR_KIND(generate_data(c), ErrorKind::ConfigError);
  c = small_config(1);
  c.n_weeks = 0;
  CHECK_ERROR_KIND(generate_data(c), ErrorKind::ConfigError);
}
