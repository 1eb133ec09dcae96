#include "canopyflux/plot.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "canopyflux/errors.hpp"

namespace canopyflux {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round the axis top up to a 1/2/5 step.
double nice_ceiling(double v) {
  if (!(v > 0.0)) return 1.0;
  const double magnitude = std::pow(10.0, std::floor(std::log10(v)));
  for (double step : {1.0, 2.0, 5.0, 10.0}) {
    if (v <= step * magnitude) return step * magnitude;
  }
  return 10.0 * magnitude;
}

}  // namespace

std::string render_transpiration_svg(const WeeklyTranspiration& weekly) {
  if (weekly.values.empty()) throw Error(ErrorKind::EmptyInput, "no weekly transpiration values to plot");

  auto values = weekly.values;
  std::sort(values.begin(), values.end(), [](const auto& a, const auto& b) { return a.week < b.week; });
  const IsoWeek first = values.front().week;
  const long span = std::max(1L, weeks_between(first, values.back().week));
  double y_max = 0.0;
  for (const auto& v : values) y_max = std::max(y_max, v.mm_day);
  y_max = nice_ceiling(y_max);

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](const IsoWeek& w) { return kLeft + plot_w * static_cast<double>(weeks_between(first, w)) / span; };
  auto py = [&](double v) { return kTop + plot_h * (1.0 - v / y_max); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n", kWidth,
      kHeight);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += fmt::format("<text class=\"title\" x=\"{:.2f}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
                     "Canopy transpiration, {}</text>\n",
                     kWidth / 2, escape(weekly.site_id));

  // Axes, ticks and labels.
  svg += fmt::format("<line class=\"axis\" x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n",
                     kLeft, kTop + plot_h, kLeft + plot_w);
  svg += fmt::format("<line class=\"axis\" x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n",
                     kLeft, kTop, kTop + plot_h);
  for (int i = 0; i <= 5; ++i) {
    const double v = y_max * i / 5.0;
    svg += fmt::format("<text class=\"ytick\" x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\" font-size=\"11\">{:g}</text>\n",
                       kLeft - 6, py(v) + 4, v);
  }
  const long label_every = std::max(1L, span / 10 + (span % 10 != 0 ? 1 : 0));
  for (long k = 0; k <= span; k += label_every) {
    const Date monday = first.monday() + std::chrono::days{7 * k};
    const IsoWeek w = IsoWeek::of(monday);
    svg += fmt::format("<text class=\"xtick\" x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
                       px(w), kTop + plot_h + 16, w.to_string());
  }
  svg += fmt::format("<text class=\"xlabel\" x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-size=\"13\">ISO week</text>\n",
                     kLeft + plot_w / 2, kHeight - 12);
  svg += fmt::format("<text class=\"ylabel\" x=\"16\" y=\"{0:.2f}\" text-anchor=\"middle\" font-size=\"13\" "
                     "transform=\"rotate(-90 16 {0:.2f})\">Transpiration (mm day-1)</text>\n",
                     kTop + plot_h / 2);

  // One polyline per run of consecutive weeks.
  std::size_t i = 0;
  while (i < values.size()) {
    std::string points;
    std::size_t j = i;
    do {
      if (!points.empty()) points += ' ';
      points += fmt::format("{:.2f},{:.2f}", px(values[j].week), py(values[j].mm_day));
      ++j;
    } while (j < values.size() && weeks_between(values[j - 1].week, values[j].week) == 1);
    svg += fmt::format("<polyline class=\"series\" fill=\"none\" stroke=\"#1f6f43\" stroke-width=\"2\" points=\"{}\"/>\n",
                       points);
    i = j;
  }
  for (const auto& v : values) {
    svg += fmt::format("<circle class=\"point\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"#1f6f43\"/>\n", px(v.week),
                       py(v.mm_day));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace canopyflux
