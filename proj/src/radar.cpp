#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "llmprof/csv.hpp"
#include "llmprof/error.hpp"
#include "llmprof/io.hpp"
#include "llmprof/steering.hpp"

namespace llmprof {

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

constexpr std::array<std::string_view, 10> kPalette = {
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::string radar_csv(const RadarDataset& radar) {
  std::string out = "axis,series,value\r\n";
  for (const auto& s : radar.series) {
    for (std::size_t i = 0; i < radar.axes.size(); ++i) {
      csv::append_row(out, {radar.axes[i].second, s.name, format_shortest(s.values[i].to_double())});
    }
  }
  return out;
}

std::vector<RadarCsvRow> parse_radar_csv(std::string_view text) {
  csv::Reader reader(strip_bom(text));
  std::vector<std::string> fields;
  if (!reader.next(fields) || fields != std::vector<std::string>{"axis", "series", "value"}) {
    throw Error(ErrorCode::kMalformedCsv, "radar CSV header must be axis,series,value");
  }
  std::vector<RadarCsvRow> rows;
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 3) throw Error(ErrorCode::kMalformedCsv, "radar CSV row with wrong arity");
    std::size_t used = 0;
    const double v = std::stod(fields[2], &used);
    if (used != fields[2].size()) throw Error(ErrorCode::kMalformedCsv, "bad value " + fields[2]);
    rows.push_back({fields[0], fields[1], v});
  }
  return rows;
}

std::string render_radar_svg(const RadarDataset& radar, std::string_view title) {
  constexpr double kSize = 640.0;
  constexpr double kCx = 320.0;
  constexpr double kCy = 330.0;
  constexpr double kRadius = 220.0;
  const std::size_t n = radar.axes.size();

  double max_value = 0.0;
  for (const auto& s : radar.series) {
    for (const auto& v : s.values) max_value = std::max(max_value, v.to_double());
  }
  // Round the outer ring up to the next 0.05 so ring labels stay readable.
  const double scale = max_value <= 0.0 ? 1.0 : std::ceil(max_value / 0.05) * 0.05;

  auto point = [&](std::size_t axis, double value) {
    const double angle = -std::numbers::pi / 2 + 2 * std::numbers::pi * static_cast<double>(axis) /
                                                     static_cast<double>(std::max<std::size_t>(n, 1));
    const double r = kRadius * value / scale;
    return std::pair{kCx + r * std::cos(angle), kCy + r * std::sin(angle)};
  };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      kSize, kSize + 20.0 * static_cast<double>(radar.series.size()));
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n", kCx,
                       xml_escape(title));
  }
  for (int ring = 1; ring <= 4; ++ring) {
    const double frac = ring / 4.0;
    std::string pts;
    for (std::size_t a = 0; a < n; ++a) {
      const auto [x, y] = point(a, scale * frac);
      pts += fmt::format("{:.2f},{:.2f} ", x, y);
    }
    svg += fmt::format("<polygon points=\"{}\" fill=\"none\" stroke=\"#cccccc\"/>\n", pts);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" fill=\"#888888\" font-size=\"10\">{:.3f}</text>\n",
                       kCx + 3, kCy - kRadius * frac, scale * frac);
  }
  for (std::size_t a = 0; a < n; ++a) {
    const auto [x, y] = point(a, scale);
    const auto [lx, ly] = point(a, scale * 1.12);
    svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#999999\"/>\n", kCx,
                       kCy, x, y);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", lx, ly,
                       xml_escape(radar.axes[a].second));
  }
  for (std::size_t s = 0; s < radar.series.size(); ++s) {
    const auto colour = kPalette[s % kPalette.size()];
    std::string pts;
    for (std::size_t a = 0; a < n; ++a) {
      const auto [x, y] = point(a, radar.series[s].values[a].to_double());
      pts += fmt::format("{:.2f},{:.2f} ", x, y);
    }
    svg += fmt::format(
        "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.08\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
        pts, colour, colour);
    const double ly = kSize + 20.0 * static_cast<double>(s) - 10.0;
    svg += fmt::format("<rect x=\"20\" y=\"{:.1f}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", ly - 10, colour);
    svg += fmt::format("<text x=\"40\" y=\"{:.1f}\">{}</text>\n", ly, xml_escape(radar.series[s].name));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace llmprof
