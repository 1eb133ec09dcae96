// canopyflux: sap flow upscaling and Sentinel-2 transpiration modelling.
//
//   canopyflux <subcommand> --config <path> [--out-dir <path>] [--seed <u64>] [--threads <n>]
//
// Subcommands: synth, ingest, features, train, report, plot, pipeline.
// Exit codes: 0 ok, 2 configuration, 3 data, 4 internal.

#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "canopyflux/config.hpp"
#include "canopyflux/errors.hpp"
#include "canopyflux/pipeline.hpp"

namespace {

using canopyflux::SiteConfig;
using canopyflux::StageRecord;

void configure_logging() {
  auto logger = spdlog::stderr_logger_st("canopyflux");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("CANOPYFLUX_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

struct CommonOptions {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "Site configuration file")->required();
  cmd->add_option("--out-dir", opts.out_dir, "Output directory (overrides [output] dir)");
  cmd->add_option("--seed", opts.seed, "Seed for every random component");
  cmd->add_option("--threads", opts.threads, "Worker threads (0 = all cores)");
}

int run_stage(const std::string& stage, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const canopyflux::Error& e) {
    std::cerr << "canopyflux " << stage << ": " << e.what() << "\n";
    return canopyflux::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "canopyflux " << stage << ": internal error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Sap flow upscaling and Sentinel-2 canopy transpiration modelling"};
  app.set_version_flag("--version", std::string(canopyflux::kToolVersion));
  app.require_subcommand(1);

  CommonOptions opts;
  std::string plot_input, plot_output;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic site at the configured input paths");
  auto* ingest = app.add_subcommand("ingest", "Sap flow, spectra and meteo to weekly tables");
  auto* features = app.add_subcommand("features", "Join weekly tables into feature tables");
  auto* train = app.add_subcommand("train", "Repeated cross-validation, mtry tuning and final forests");
  auto* report = app.add_subcommand("report", "Accuracy and importance tables from all results in the output dir");
  auto* plot = app.add_subcommand("plot", "SVG chart of weekly transpiration");
  auto* pipeline = app.add_subcommand("pipeline", "ingest, features, train, report and plot in sequence");
  for (auto* cmd : {synth, ingest, features, train, report, plot, pipeline}) add_common(cmd, opts);
  plot->add_option("--input", plot_input, "Weekly transpiration CSV (default: from the output dir)");
  plot->add_option("--output", plot_output, "SVG path (default: transpiration_<site>.svg in the output dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  SiteConfig config;
  unsigned threads = 0;
  const int loaded = run_stage("config", [&] {
    config = canopyflux::load_site_config(opts.config);
    if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
    if (opts.seed) {
      canopyflux::override_seed(config, *opts.seed);
      config.synth.seed = *opts.seed;
    }
    threads = opts.threads.value_or(config.threads);
  });
  if (loaded != 0) return loaded;

  auto stage = [&](const std::string& name, const std::function<StageRecord()>& body) {
    return run_stage(name, [&] {
      const auto record = body();
      canopyflux::write_manifest(config, record);
    });
  };
  auto ingest_fn = [&] { return canopyflux::run_ingest(config, threads); };
  auto features_fn = [&] { return canopyflux::run_features(config); };
  auto train_fn = [&] { return canopyflux::run_train(config, threads); };
  auto report_fn = [&] {
    std::string text;
    auto record = canopyflux::run_report(config, &text);
    std::cout << text;
    return record;
  };
  auto plot_fn = [&] { return canopyflux::run_plot(config, plot_input, plot_output); };

  if (synth->parsed()) return stage("synth", [&] { return canopyflux::run_synth(config); });
  if (ingest->parsed()) return stage("ingest", ingest_fn);
  if (features->parsed()) return stage("features", features_fn);
  if (train->parsed()) return stage("train", train_fn);
  if (report->parsed()) return stage("report", report_fn);
  if (plot->parsed()) return stage("plot", plot_fn);

  for (const auto& [name, fn] : std::initializer_list<std::pair<std::string, std::function<StageRecord()>>>{
           {"ingest", ingest_fn}, {"features", features_fn}, {"train", train_fn}, {"report", report_fn},
           {"plot", plot_fn}}) {
    if (const int code = stage(name, fn); code != 0) return code;
  }
  return 0;
}
