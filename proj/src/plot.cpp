#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "gsarah/bench.hpp"
#include "gsarah/schedules.hpp"

namespace gsarah {

namespace {

constexpr double kWidth = 860.0, kHeight = 520.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 20.0, kBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#e377c2"};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

struct Series {
  std::string name;
  std::vector<double> x;   // mean epochs_equivalent per common epoch index
  std::vector<double> y;   // mean metric, clamped and log10-transformed later
};

}  // namespace

void emit_plot(const ResultTable& table, PlotMetric metric, std::ostream& out,
               const std::vector<std::string>& method_order) {
  if (table.rows.empty()) {
    throw ConfigError("plot: empty result table");
  }

  // Method order: explicit list first, then first appearance.
  std::vector<std::string> order;
  auto add_method = [&order](const std::string& m) {
    if (std::find(order.begin(), order.end(), m) == order.end()) {
      order.push_back(m);
    }
  };
  for (const auto& m : method_order) add_method(m);
  for (const auto& r : table.rows) add_method(r.method);

  // Seed-averaged series at epoch indices present for every seed.
  std::vector<Series> series;
  for (const auto& method : order) {
    std::set<std::uint64_t> seeds;
    std::map<std::int64_t, std::pair<std::size_t, std::pair<double, double>>>
        by_epoch;  // epoch -> (count, (sum x, sum y))
    for (const auto& r : table.rows) {
      if (r.method != method) continue;
      seeds.insert(r.seed);
      auto& slot = by_epoch[r.epoch];
      slot.first += 1;
      slot.second.first += r.epochs_equivalent;
      slot.second.second +=
          metric == PlotMetric::FValue ? r.f_value : r.grad_norm_sq;
    }
    if (seeds.empty()) continue;
    Series s;
    s.name = method;
    for (const auto& [epoch, slot] : by_epoch) {
      if (slot.first != seeds.size()) continue;
      const double inv = 1.0 / static_cast<double>(slot.first);
      s.x.push_back(slot.second.first * inv);
      s.y.push_back(slot.second.second * inv);
    }
    if (!s.x.empty()) series.push_back(std::move(s));
  }
  if (series.empty()) {
    throw ConfigError("plot: no common epoch indices to draw");
  }

  double x_max = 0.0;
  double log_min = 1e300, log_max = -1e300;
  for (auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x_max = std::max(x_max, s.x[i]);
      const double clamped = std::max(s.y[i], 1e-300);
      s.y[i] = std::log10(clamped);
      log_min = std::min(log_min, s.y[i]);
      log_max = std::max(log_max, s.y[i]);
    }
  }
  if (x_max <= 0.0) x_max = 1.0;
  double lo = std::floor(log_min), hi = std::ceil(log_max);
  if (hi <= lo) hi = lo + 1.0;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + plot_w * (x / x_max); };
  auto sy = [&](double ly) {
    return kTop + plot_h * (1.0 - (ly - lo) / (hi - lo));
  };

  const char* metric_name =
      metric == PlotMetric::FValue ? "f_value" : "grad_norm_sq";

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         fmt("%.0f", kWidth) + "\" height=\"" + fmt("%.0f", kHeight) +
         "\" viewBox=\"0 0 " + fmt("%.0f", kWidth) + " " +
         fmt("%.0f", kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes.
  svg += "<g stroke=\"#333\" stroke-width=\"1\">\n";
  svg += "<line x1=\"" + fmt("%.1f", kLeft) + "\" y1=\"" +
         fmt("%.1f", kTop + plot_h) + "\" x2=\"" + fmt("%.1f", kLeft + plot_w) +
         "\" y2=\"" + fmt("%.1f", kTop + plot_h) + "\"/>\n";
  svg += "<line x1=\"" + fmt("%.1f", kLeft) + "\" y1=\"" + fmt("%.1f", kTop) +
         "\" x2=\"" + fmt("%.1f", kLeft) + "\" y2=\"" +
         fmt("%.1f", kTop + plot_h) + "\"/>\n";
  svg += "</g>\n";

  // x ticks: 6 evenly spaced, y ticks: one per decade (thinned to <= 12).
  svg += "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
  for (int t = 0; t <= 5; ++t) {
    const double xv = x_max * t / 5.0;
    const double px = sx(xv);
    svg += "<line x1=\"" + fmt("%.1f", px) + "\" y1=\"" +
           fmt("%.1f", kTop + plot_h) + "\" x2=\"" + fmt("%.1f", px) +
           "\" y2=\"" + fmt("%.1f", kTop + plot_h + 5) +
           "\" stroke=\"#333\"/>\n";
    svg += "<text x=\"" + fmt("%.1f", px) + "\" y=\"" +
           fmt("%.1f", kTop + plot_h + 20) + "\" text-anchor=\"middle\">" +
           fmt("%.4g", xv) + "</text>\n";
  }
  const int decade_step =
      std::max(1, static_cast<int>((hi - lo) / 12.0 + 0.999));
  for (double ly = lo; ly <= hi + 1e-9; ly += decade_step) {
    const double py = sy(ly);
    svg += "<line x1=\"" + fmt("%.1f", kLeft - 5) + "\" y1=\"" +
           fmt("%.1f", py) + "\" x2=\"" + fmt("%.1f", kLeft) + "\" y2=\"" +
           fmt("%.1f", py) + "\" stroke=\"#333\"/>\n";
    svg += "<text x=\"" + fmt("%.1f", kLeft - 8) + "\" y=\"" +
           fmt("%.1f", py + 4) + "\" text-anchor=\"end\">1e" +
           fmt("%.0f", ly) + "</text>\n";
  }
  svg += "<text x=\"" + fmt("%.1f", kLeft + plot_w / 2) + "\" y=\"" +
         fmt("%.1f", kHeight - 10) +
         "\" text-anchor=\"middle\">epochs (IFO / n)</text>\n";
  svg += std::string("<text x=\"15\" y=\"") + fmt("%.1f", kTop + plot_h / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
         fmt("%.1f", kTop + plot_h / 2) + ")\">" + metric_name +
         " (log scale)</text>\n";
  svg += "</g>\n";

  // Polylines.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(*kPalette))];
    svg += "<polyline fill=\"none\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (i > 0) svg += ' ';
      svg += fmt("%.2f", sx(series[s].x[i])) + "," +
             fmt("%.2f", sy(series[s].y[i]));
    }
    svg += "\"/>\n";
  }

  // Legend, top right, in series order.
  const double lx = kLeft + plot_w - 240.0, ly0 = kTop + 12.0;
  svg += "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = ly0 + 18.0 * static_cast<double>(s);
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(*kPalette))];
    svg += "<line x1=\"" + fmt("%.1f", lx) + "\" y1=\"" + fmt("%.1f", y - 4) +
           "\" x2=\"" + fmt("%.1f", lx + 24) + "\" y2=\"" +
           fmt("%.1f", y - 4) + "\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt("%.1f", lx + 30) + "\" y=\"" + fmt("%.1f", y) +
           "\">" + series[s].name + "</text>\n";
  }
  svg += "</g>\n</svg>\n";

  out << svg;
}

}  // namespace gsarah
