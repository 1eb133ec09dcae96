#include "canopyflux/pipeline.hpp"

#include <algorithm>
#include <array>
#include <memory>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "canopyflux/csv.hpp"
#include "canopyflux/environment.hpp"
#include "canopyflux/errors.hpp"
#include "canopyflux/evaluation.hpp"
#include "canopyflux/features.hpp"
#include "canopyflux/forest.hpp"
#include "canopyflux/plot.hpp"
#include "canopyflux/sapflow.hpp"
#include "canopyflux/synthgen.hpp"

namespace canopyflux {

namespace {

std::string daily_transpiration_csv(const DailyTranspiration& daily) {
  std::string out = "site_id,date,transpiration_mm_day\n";
  for (const auto& v : daily.values) {
    out += fmt::format("{},{},{}\n", daily.site_id, format_date(v.date), format_number(v.mm_day));
  }
  return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text_file(path)); }

std::filesystem::path OutputLayout::features(std::string_view site, FeatureSet set) const {
  return dir / feature_table_filename(site, set);
}

std::filesystem::path OutputLayout::cv_result(std::string_view site, FeatureSet set) const {
  return dir / fmt::format("cv_{}_{}.json", site, file_slug(set));
}

std::filesystem::path OutputLayout::model(std::string_view site, FeatureSet set) const {
  return dir / fmt::format("forest_{}_{}.json", site, file_slug(set));
}

std::filesystem::path OutputLayout::plot(std::string_view site) const {
  return dir / fmt::format("transpiration_{}.svg", site);
}

std::filesystem::path OutputLayout::manifest(std::string_view stage) const {
  return dir / fmt::format("manifest_{}.json", stage);
}

StageRecord run_synth(const SiteConfig& config) {
  const SynthPaths paths{config.sapflow_csv, config.inventory_csv, config.s2_csv, config.meteo_csv,
                         config.sapflow_csv.parent_path() / "truth.json"};
  const auto data = generate_data(config.synth);
  write_synth(config.synth, data, paths);
  spdlog::info("synth: {} readings, {} spectral samples, {} weeks (noise_sd={:.4f}, oracle r2={:.3f})",
               data.sapflow.size(), data.spectra.size(), data.truth.size(), data.noise_sd, data.oracle_r2);
  return {"synth", {}, {paths.sapflow, paths.inventory, paths.s2, paths.meteo, paths.truth}};
}

StageRecord run_ingest(const SiteConfig& config, unsigned threads) {
  const OutputLayout out{config.out_dir};
  StageRecord record{"ingest", {config.sapflow_csv, config.inventory_csv, config.s2_csv}, {}};

  const auto readings = read_sapflow_csv(config.sapflow_csv);
  const auto inventory = read_inventory_csv(config.inventory_csv);
  const auto upscaled = upscale_site(readings, inventory, config.upscaling, config.site_id, threads);
  if (upscaled.clamped_readings > 0) {
    spdlog::warn("ingest: {} readings above the delta_t baseline were clamped to zero flow",
                 upscaled.clamped_readings);
  }

  const auto samples = parse_s2_csv(config.s2_csv);
  const auto clear = qa_filter(samples);
  const auto acquisitions = buffer_average(clear, config.buffer_radius);
  const auto spectra = weekly_bands(acquisitions);

  nlohmann::json qa = {
      {"site_id", config.site_id},
      {"sapflow",
       {{"readings", readings.size()},
        {"trees", upscaled.n_trees},
        {"clamped_readings", upscaled.clamped_readings},
        {"days", upscaled.daily.values.size()},
        {"weeks", upscaled.weekly.values.size()}}},
      {"spectra",
       {{"samples", samples.size()},
        {"flagged_samples", samples.size() - clear.size()},
        {"acquisitions", acquisitions.size()},
        {"weeks", spectra.size()}}},
  };

  write_text_file(out.weekly_transpiration(), weekly_transpiration_csv(upscaled.weekly));
  write_text_file(out.daily_transpiration(), daily_transpiration_csv(upscaled.daily));
  write_text_file(out.weekly_spectra(), weekly_spectra_csv(spectra));
  record.outputs = {out.weekly_transpiration(), out.daily_transpiration(), out.weekly_spectra()};

  if (config.needs_meteo()) {
    record.inputs.push_back(config.meteo_csv);
    const auto daily = parse_meteo_csv(config.meteo_csv);
    const auto weekly = weekly_meteo(daily, config.meteo_min_days);
    qa["meteo"] = {{"days", daily.size()}, {"weeks", weekly.size()}};
    write_text_file(out.weekly_meteo(), weekly_meteo_csv(weekly));
    record.outputs.push_back(out.weekly_meteo());
  }
  write_json(out.ingest_qa(), qa);
  record.outputs.push_back(out.ingest_qa());
  return record;
}

StageRecord run_features(const SiteConfig& config) {
  const OutputLayout out{config.out_dir};
  StageRecord record{"features", {out.weekly_transpiration(), out.weekly_spectra()}, {}};
  auto transpiration = read_weekly_transpiration_csv(out.weekly_transpiration());
  transpiration.site_id = config.site_id;
  const auto spectra = read_weekly_spectra_csv(out.weekly_spectra());
  std::vector<WeeklyMeteo> meteo;
  if (config.needs_meteo()) {
    record.inputs.push_back(out.weekly_meteo());
    meteo = read_weekly_meteo_csv(out.weekly_meteo());
  }
  for (auto set : config.feature_sets) {
    const auto table = join_weekly(transpiration, spectra, meteo, set);
    spdlog::info("features: {} {} -> {} weeks", config.site_id, to_string(set), table.rows.size());
    write_text_file(out.features(config.site_id, set), feature_table_csv(table));
    record.outputs.push_back(out.features(config.site_id, set));
  }
  return record;
}

StageRecord run_train(const SiteConfig& config, unsigned threads) {
  const OutputLayout out{config.out_dir};
  StageRecord record{"train", {}, {}};
  for (auto set : config.feature_sets) {
    const auto path = out.features(config.site_id, set);
    record.inputs.push_back(path);
    const auto table = read_feature_table_csv(path, config.site_id, set);
    const auto design = to_matrix(table);

    SiteResult result{config.site_id, set, repeated_cv(design, config.forest, config.cv, threads), {}};
    ForestConfig final_config = config.forest;
    final_config.mtry = result.cv.best_mtry;
    const auto model = fit_forest(design.x, design.y, final_config, design.names, threads);
    result.importance = scale_importance(raw_importance(model), design.names);
    spdlog::info("train: {} {} best mtry {} rmse {:.4f}", config.site_id, to_string(set), result.cv.best_mtry,
                 result.cv.best.rmse.mean);

    write_json(out.cv_result(config.site_id, set), site_result_to_json(result));
    save_forest(model, out.model(config.site_id, set));
    record.outputs.push_back(out.cv_result(config.site_id, set));
    record.outputs.push_back(out.model(config.site_id, set));
  }
  return record;
}

StageRecord run_report(const SiteConfig& config, std::string* rendered) {
  const OutputLayout out{config.out_dir};
  StageRecord record{"report", {}, {}};
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(out.dir, ec)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("cv_") && name.ends_with(".json")) {
      record.inputs.push_back(entry.path());
    }
  }
  if (record.inputs.empty()) {
    throw Error(ErrorKind::EmptyInput, fmt::format("no cv_*.json results in '{}'", out.dir.string()));
  }
  std::sort(record.inputs.begin(), record.inputs.end());

  std::vector<SiteResult> results;
  for (const auto& path : record.inputs) {
    try {
      results.push_back(site_result_from_json(nlohmann::json::parse(read_text_file(path))));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::DataError, fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  const auto text = render_report_tables(results);
  write_json(out.report_json(), report_json(results));
  write_text_file(out.report_text(), text);
  if (rendered) *rendered = text;
  record.outputs = {out.report_json(), out.report_text()};
  return record;
}

StageRecord run_plot(const SiteConfig& config, const std::filesystem::path& input,
                     const std::filesystem::path& output) {
  const OutputLayout out{config.out_dir};
  const auto source = input.empty() ? out.weekly_transpiration() : input;
  auto weekly = read_weekly_transpiration_csv(source);
  if (weekly.site_id.empty()) weekly.site_id = config.site_id;
  const auto target = output.empty() ? out.plot(weekly.site_id) : output;
  write_text_file(target, render_transpiration_svg(weekly));
  return {"plot", {source}, {target}};
}

void write_manifest(const SiteConfig& config, const StageRecord& record) {
  auto files = [](const std::vector<std::filesystem::path>& paths) {
    auto list = nlohmann::json::array();
    for (const auto& p : paths) {
      std::error_code ec;
      const bool present = std::filesystem::is_regular_file(p, ec);
      list.push_back({{"path", p.generic_string()}, {"sha256", present ? sha256_file(p) : std::string()}});
    }
    return list;
  };
  std::error_code ec;
  const bool have_config = std::filesystem::is_regular_file(config.source, ec);
  nlohmann::json doc = {
      {"schema", "manifest-v1"},
      {"tool", "canopyflux"},
      {"version", std::string(kToolVersion)},
      {"stage", record.stage},
      {"site_id", config.site_id},
      {"seed", config.seed},
      {"config", {{"path", config.source.generic_string()}, {"sha256", have_config ? sha256_file(config.source) : ""}}},
      {"inputs", files(record.inputs)},
      {"outputs", files(record.outputs)},
  };
  write_json(OutputLayout{config.out_dir}.manifest(record.stage), doc);
}

}  // namespace canopyflux
