#include "canopyflux/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "canopyflux/csv.hpp"
#include "canopyflux/errors.hpp"

namespace canopyflux {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto comma = value.find(',', start);
    auto piece = trim(value.substr(start, comma == value.npos ? value.npos : comma - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (comma == value.npos) break;
    start = comma + 1;
  }
  return out;
}

class Parser {
 public:
  Parser(const std::filesystem::path& source, std::size_t line) : source_(source), line_(line) {}

  [[noreturn]] void fail(std::string_view what) const {
    throw Error(ErrorKind::ConfigError, fmt::format("{}:{}: {}", source_.string(), line_, what));
  }

  double number(std::string_view v) const {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) fail(fmt::format("not a number: '{}'", v));
    return out;
  }

  std::uint64_t unsigned_integer(std::string_view v) const {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) {
      fail(fmt::format("not a non-negative integer: '{}'", v));
    }
    return out;
  }

  double positive(std::string_view v) const {
    const double x = number(v);
    if (!(x > 0.0)) fail(fmt::format("must be > 0, got {}", x));
    return x;
  }

  int count(std::string_view v, int min, int max) const {
    const auto x = unsigned_integer(v);
    if (x < static_cast<std::uint64_t>(min) || x > static_cast<std::uint64_t>(max)) {
      fail(fmt::format("must lie in [{}, {}], got {}", min, max, x));
    }
    return static_cast<int>(x);
  }

  bool boolean(std::string_view v) const {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail(fmt::format("not a boolean: '{}'", v));
  }

 private:
  const std::filesystem::path& source_;
  std::size_t line_;
};

using Setter = std::function<void(SiteConfig&, std::string_view, const Parser&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"site.id",
       [](SiteConfig& c, std::string_view v, const Parser& p) {
         if (v.empty() || v.find_first_of(",/\\ ") != v.npos) p.fail("site id must be non-empty without ',', '/' or spaces");
         c.site_id = std::string(v);
       }},
      {"site.plot_radius_m", [](SiteConfig& c, std::string_view v, const Parser& p) { c.plot_radius = p.positive(v); }},

      {"inputs.sapflow", [](SiteConfig& c, std::string_view v, const Parser&) { c.sapflow_csv = std::string(v); }},
      {"inputs.inventory", [](SiteConfig& c, std::string_view v, const Parser&) { c.inventory_csv = std::string(v); }},
      {"inputs.s2", [](SiteConfig& c, std::string_view v, const Parser&) { c.s2_csv = std::string(v); }},
      {"inputs.meteo", [](SiteConfig& c, std::string_view v, const Parser&) { c.meteo_csv = std::string(v); }},
      {"output.dir", [](SiteConfig& c, std::string_view v, const Parser&) { c.out_dir = std::string(v); }},

      {"sapflow.window_days",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.upscaling.window_days = p.count(v, 1, 366); }},
      {"sapflow.min_hours",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.upscaling.min_hours = p.count(v, 1, 24); }},
      {"sapflow.min_days",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.upscaling.min_days = p.count(v, 1, 7); }},
      {"sapflow.granier_coefficient",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.upscaling.calibration.coefficient = p.positive(v); }},
      {"sapflow.granier_exponent",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.upscaling.calibration.exponent = p.positive(v); }},
      {"sapflow.tree_coverage",
       [](SiteConfig& c, std::string_view v, const Parser& p) {
         if (v == "all") {
           c.upscaling.coverage = TreeCoverage::AllTrees;
         } else if (v == "available") {
           c.upscaling.coverage = TreeCoverage::AvailableSubset;
         } else {
           p.fail("tree_coverage must be 'all' or 'available'");
         }
       }},

      {"allometry.alpha",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.upscaling.allometry.alpha = p.positive(v); }},
      {"allometry.beta", [](SiteConfig& c, std::string_view v, const Parser& p) { c.upscaling.allometry.beta = p.number(v); }},

      {"spectra.buffer_radius_m", [](SiteConfig& c, std::string_view v, const Parser& p) { c.buffer_radius = p.positive(v); }},
      {"meteo.min_days", [](SiteConfig& c, std::string_view v, const Parser& p) { c.meteo_min_days = p.count(v, 1, 7); }},

      {"model.feature_set",
       [](SiteConfig& c, std::string_view v, const Parser& p) {
         c.feature_sets.clear();
         for (const auto& item : split_list(v)) {
           auto set = parse_feature_set(item);
           if (!set) p.fail(fmt::format("unknown feature set '{}' (expected S2 or S2+Meteo)", item));
           if (std::find(c.feature_sets.begin(), c.feature_sets.end(), *set) == c.feature_sets.end()) {
             c.feature_sets.push_back(*set);
           }
         }
         if (c.feature_sets.empty()) p.fail("feature_set is empty");
       }},
      {"model.n_trees",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.forest.n_trees = static_cast<std::size_t>(p.count(v, 1, 100000)); }},
      {"model.min_node_size",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.forest.min_node_size = static_cast<std::size_t>(p.count(v, 1, 100000)); }},
      {"model.bootstrap", [](SiteConfig& c, std::string_view v, const Parser& p) { c.forest.bootstrap = p.boolean(v); }},
      {"model.mtry_grid",
       [](SiteConfig& c, std::string_view v, const Parser& p) {
         c.cv.mtry_grid.clear();
         if (v == "auto") return;
         for (const auto& item : split_list(v)) {
           auto dash = item.find('-');
           if (dash == std::string::npos) {
             c.cv.mtry_grid.push_back(static_cast<std::size_t>(p.count(item, 1, 1000)));
           } else {
             const int lo = p.count(trim(std::string_view(item).substr(0, dash)), 1, 1000);
             const int hi = p.count(trim(std::string_view(item).substr(dash + 1)), 1, 1000);
             if (hi < lo) p.fail(fmt::format("empty mtry range '{}'", item));
             for (int m = lo; m <= hi; ++m) c.cv.mtry_grid.push_back(static_cast<std::size_t>(m));
           }
         }
         if (c.cv.mtry_grid.empty()) p.fail("mtry_grid is empty");
       }},
      {"model.folds", [](SiteConfig& c, std::string_view v, const Parser& p) { c.cv.k = static_cast<std::size_t>(p.count(v, 2, 1000)); }},
      {"model.repeats",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.cv.repeats = static_cast<std::size_t>(p.count(v, 1, 10000)); }},
      {"model.seed", [](SiteConfig& c, std::string_view v, const Parser& p) { c.seed = p.unsigned_integer(v); }},
      {"model.threads",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.threads = static_cast<unsigned>(p.count(v, 0, 1024)); }},

      {"synth.seed", [](SiteConfig& c, std::string_view v, const Parser& p) { c.synth.seed = p.unsigned_integer(v); }},
      {"synth.n_weeks",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.synth.n_weeks = static_cast<std::size_t>(p.count(v, 1, 520)); }},
      {"synth.n_trees",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.synth.n_trees = static_cast<std::size_t>(p.count(v, 1, 1000)); }},
      {"synth.start",
       [](SiteConfig& c, std::string_view v, const Parser& p) {
         auto d = parse_date(v);
         if (!d) p.fail(fmt::format("bad date '{}'", v));
         c.synth.start = *d;
       }},
      {"synth.cloud_fraction", [](SiteConfig& c, std::string_view v, const Parser& p) { c.synth.cloud_fraction = p.number(v); }},
      {"synth.noise_sd", [](SiteConfig& c, std::string_view v, const Parser& p) { c.synth.noise_sd = p.number(v); }},
      {"synth.target_oracle_r2",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.synth.target_oracle_r2 = p.number(v); }},
      {"synth.base_transpiration",
       [](SiteConfig& c, std::string_view v, const Parser& p) { c.synth.base_transpiration = p.positive(v); }},
      {"synth.coefficients",
       [](SiteConfig& c, std::string_view v, const Parser& p) {
         c.synth.planted_coefficients.clear();
         for (const auto& item : split_list(v)) {
           auto colon = item.find(':');
           if (colon == std::string::npos) p.fail(fmt::format("coefficient '{}' is not name:weight", item));
           c.synth.planted_coefficients[std::string(trim(std::string_view(item).substr(0, colon)))] =
               p.number(trim(std::string_view(item).substr(colon + 1)));
         }
       }},
  };
  return table;
}

}  // namespace

bool SiteConfig::needs_meteo() const {
  return std::find(feature_sets.begin(), feature_sets.end(), FeatureSet::S2Meteo) != feature_sets.end();
}

SiteConfig parse_site_config(std::string_view text, const std::filesystem::path& source) {
  SiteConfig config;
  config.source = source;
  std::set<std::string> seen;
  std::string section;
  bool buffer_radius_set = false;

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const Parser parser(source, line_no);
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') parser.fail(fmt::format("malformed section header '{}'", line));
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == line.npos) parser.fail(fmt::format("expected 'key = value', got '{}'", line));
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) parser.fail(fmt::format("unknown key '{}'", key));
    if (!seen.insert(key).second) parser.fail(fmt::format("duplicate key '{}'", key));
    it->second(config, value, parser);
    buffer_radius_set = buffer_radius_set || key == "spectra.buffer_radius_m";
  }

  if (!seen.contains("allometry.alpha") || !seen.contains("allometry.beta")) {
    throw Error(ErrorKind::ConfigError,
                fmt::format("{}: [allometry] alpha and beta are required (no default coefficients)", source.string()));
  }

  const auto base = source.has_parent_path() ? source.parent_path() : std::filesystem::path(".");
  auto resolve = [&](std::filesystem::path& p, const char* fallback) {
    if (p.empty()) p = fallback;
    if (p.is_relative()) p = base / p;
  };
  resolve(config.sapflow_csv, "sapflow.csv");
  resolve(config.inventory_csv, "inventory.csv");
  resolve(config.s2_csv, "s2_samples.csv");
  resolve(config.meteo_csv, "meteo.csv");
  resolve(config.out_dir, "out");

  config.upscaling.plot_radius = config.plot_radius;
  if (!buffer_radius_set) config.buffer_radius = config.plot_radius;
  override_seed(config, config.seed);
  if (!seen.contains("synth.seed")) config.synth.seed = config.seed;
  config.synth.site_id = config.site_id;
  config.synth.plot_radius = config.plot_radius;
  config.synth.allometry = config.upscaling.allometry;
  config.synth.calibration = config.upscaling.calibration;
  return config;
}

SiteConfig load_site_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error&) {
    throw Error(ErrorKind::ConfigError, fmt::format("cannot read config '{}'", path.string()));
  }
  return parse_site_config(text, path);
}

void override_seed(SiteConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.forest.seed = seed;
  config.cv.seed = seed;
}

}  // namespace canopyflux
