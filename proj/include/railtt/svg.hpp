#ifndef RAILTT_SVG_HPP
#define RAILTT_SVG_HPP

// Self-contained SVG output: time-space diagrams, per-train occupancy and
// load-factor charts, and train-count/AWT frontiers. Coordinates are
// printed at fixed precision and elements in a fixed order, so equal
// inputs give byte-identical files.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fmt/core.h>

#include "railtt/demand_model.hpp"
#include "railtt/line_model.hpp"
#include "railtt/metrics.hpp"
#include "railtt/pareto.hpp"
#include "railtt/passenger_flow.hpp"

namespace railtt::svg {

inline constexpr std::string_view kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Plot area inside a fixed canvas, mapping data ranges to pixels.
struct Frame {
  double width = 1000.0, height = 600.0;
  double left = 80.0, right = 30.0, top = 40.0, bottom = 60.0;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
  double x_of(double pixel) const { return x0 + (pixel - left) / (width - left - right) * (x1 - x0); }
};

class Document {
 public:
  explicit Document(const Frame& f) : f_(f) {
    out_ = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
        "viewBox=\"0 0 {0:.0f} {1:.0f}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        "<rect width=\"{0:.0f}\" height=\"{1:.0f}\" fill=\"white\"/>\n",
        f.width, f.height);
  }

  void line(double x1, double y1, double x2, double y2, std::string_view cls, std::string_view stroke,
            double w = 1.0) {
    out_ += fmt::format("<line class=\"{}\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" "
                        "stroke-width=\"{:.1f}\"/>\n",
                        cls, x1, y1, x2, y2, stroke, w);
  }

  void text(double x, double y, std::string_view s, std::string_view anchor = "middle", std::string_view extra = "") {
    out_ += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"{}\"{}>{}</text>\n", x, y, anchor, extra,
                        escape(s));
  }

  // Data-space polyline.
  void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view cls, std::string_view stroke,
                double w, std::string_view extra = "") {
    std::string p;
    for (const auto& [x, y] : pts) p += fmt::format("{}{:.2f},{:.2f}", p.empty() ? "" : " ", f_.px(x), f_.py(y));
    out_ += fmt::format("<polyline class=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{:.1f}\"{}/>\n",
                        cls, p, stroke, w, extra);
  }

  void marker(double x, double y, std::string_view stroke, bool filled) {
    out_ += fmt::format("<circle class=\"marker\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"{}\" stroke=\"{}\"/>\n",
                        f_.px(x), f_.py(y), filled ? stroke : "white", stroke);
  }

  void axes(std::string_view title, std::string_view xlabel, std::string_view ylabel, int xticks, int yticks) {
    const double bx = f_.px(f_.x0), by = f_.py(f_.y0);
    line(bx, by, f_.px(f_.x1), by, "axis", "black");
    line(bx, by, bx, f_.py(f_.y1), "axis", "black");
    for (int t = 0; t <= xticks; ++t) {
      const double v = f_.x0 + (f_.x1 - f_.x0) * t / xticks;
      line(f_.px(v), by, f_.px(v), by + 5, "tick", "black");
      text(f_.px(v), by + 18, tick_label(v));
    }
    for (int t = 0; yticks > 0 && t <= yticks; ++t) {
      const double v = f_.y0 + (f_.y1 - f_.y0) * t / yticks;
      line(bx - 5, f_.py(v), bx, f_.py(v), "tick", "black");
      text(bx - 8, f_.py(v) + 4, tick_label(v), "end");
    }
    text(f_.width / 2, 22, title, "middle", " font-size=\"15\"");
    text((bx + f_.px(f_.x1)) / 2, f_.height - 15, xlabel);
    out_ += fmt::format("<text x=\"18\" y=\"{0:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0:.2f})\">{1}</text>\n",
                        (by + f_.py(f_.y1)) / 2, escape(ylabel));
  }

  std::string finish() { return out_ + "</svg>\n"; }
  const Frame& frame() const noexcept { return f_; }

 private:
  static std::string tick_label(double v) {
    return std::abs(v - std::round(v)) < 1e-9 ? fmt::format("{:.0f}", v) : fmt::format("{:.2f}", v);
  }
  Frame f_;
  std::string out_;
};

struct TimeSpaceOptions {
  bool demand_overlay = true;
  // Pairs to overlay (0-based); empty means the demand leaving each station.
  std::vector<std::pair<int, int>> overlay_pairs;
  double t0 = 0.0;
  std::optional<double> t1;  // defaults to the horizon
  double width = 1200.0, height = 600.0;
};

inline Frame time_space_frame(const Line& line, const TimeSpaceOptions& opt) {
  Frame f;
  f.width = opt.width;
  f.height = opt.height;
  f.left = 140.0;
  f.x0 = opt.t0;
  f.x1 = opt.t1.value_or(line.horizon);
  f.y0 = 0.0;
  f.y1 = std::max(line.total_length(), 1e-9);
  return f;
}

/// Train trajectories in the (time, distance from the first station)
/// plane, with dwells drawn as flat steps. The overlay draws each
/// cumulative demand curve inside the band above its origin station.
inline std::string render_time_space(const Timetable& tt, const Line& line, const ODDemandMatrix* od,
                                     const TimeSpaceOptions& opt = {}) {
  const int s = line.n_stations();
  const Frame f = time_space_frame(line, opt);
  Document doc(f);
  std::vector<double> dist(s, 0.0);
  for (int i = 0; i + 1 < s; ++i) dist[i + 1] = dist[i] + line.segments[i].length_km;

  doc.axes("Time-space diagram", "time (min)", "distance (km)", 12, 0);
  for (int i = 0; i < s; ++i) {
    doc.line(f.px(f.x0), f.py(dist[i]), f.px(f.x1), f.py(dist[i]), "station", "#cccccc");
    doc.text(f.left - 8, f.py(dist[i]) + 4, line.station_names[i], "end");
  }

  if (opt.demand_overlay && od) {
    std::vector<std::pair<int, std::vector<std::pair<int, int>>>> groups;
    if (opt.overlay_pairs.empty()) {
      for (int i = 0; i + 1 < s; ++i) {
        std::vector<std::pair<int, int>> pairs;
        for (int j = i + 1; j < s; ++j) pairs.emplace_back(i, j);
        groups.emplace_back(i, std::move(pairs));
      }
    } else {
      for (const auto& pr : opt.overlay_pairs) groups.push_back({pr.first, {pr}});
    }
    constexpr int samples = 289;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const int i = groups[g].first;
      const double band = (i + 1 < s ? dist[i + 1] : dist[i]) - dist[i];
      std::vector<double> cum(samples);
      for (int n = 0; n < samples; ++n) {
        const double t = f.x0 + (f.x1 - f.x0) * n / (samples - 1);
        for (auto [o, d] : groups[g].second) cum[n] += od->cumulative(o, d, t);
      }
      const double lo = cum.front(), hi = std::max(cum.back(), lo + 1e-12);
      std::vector<std::pair<double, double>> pts;
      for (int n = 0; n < samples; ++n) {
        const double t = f.x0 + (f.x1 - f.x0) * n / (samples - 1);
        pts.emplace_back(t, dist[i] + 0.9 * band * (cum[n] - lo) / (hi - lo));
      }
      doc.polyline(pts, "demand", kPalette[(g + 2) % std::size(kPalette)], 1.0, " stroke-dasharray=\"4 3\"");
    }
  }

  for (int k : tt.active_indices()) {
    const auto& tr = tt.trains[k];
    std::vector<std::pair<double, double>> pts{{tr.departure[0], dist[0]}};
    for (int i = 1; i < s; ++i) {
      pts.emplace_back(tr.departure[i] - tr.stop_time[i], dist[i]);
      if (tr.stop_time[i] > 0.0) pts.emplace_back(tr.departure[i], dist[i]);
    }
    doc.polyline(pts, "train", "#000000", 2.0, fmt::format(" data-train=\"{}\"", k + 1));
  }
  return doc.finish();
}

struct Series {
  std::string name;
  std::vector<double> x, y;
  std::vector<bool> hollow;  // per point; empty means all filled
};

/// Line chart with a legend; a single-point series shows as a marker.
inline std::string line_chart(std::string_view title, std::string_view xlabel, std::string_view ylabel,
                              const std::vector<Series>& series, bool markers) {
  Frame f;
  f.right = 160.0;
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  bool first = true;
  for (const auto& sr : series)
    for (std::size_t n = 0; n < sr.x.size(); ++n) {
      if (first) {
        xmin = xmax = sr.x[n];
        ymax = sr.y[n];
        first = false;
      }
      xmin = std::min(xmin, sr.x[n]);
      xmax = std::max(xmax, sr.x[n]);
      ymax = std::max(ymax, sr.y[n]);
      ymin = std::min(ymin, sr.y[n]);
    }
  if (xmax == xmin) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  if (ymax == ymin) ymax = ymin + 1.0;
  f.x0 = xmin;
  f.x1 = xmax;
  f.y0 = ymin;
  f.y1 = ymax * 1.05;
  Document doc(f);
  doc.axes(title, xlabel, ylabel, 10, 5);
  for (std::size_t q = 0; q < series.size(); ++q) {
    const auto& sr = series[q];
    const auto colour = kPalette[q % std::size(kPalette)];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t n = 0; n < sr.x.size(); ++n) pts.emplace_back(sr.x[n], sr.y[n]);
    if (pts.size() > 1) doc.polyline(pts, "series", colour, 1.5);
    if (markers || pts.size() == 1)
      for (std::size_t n = 0; n < pts.size(); ++n)
        doc.marker(pts[n].first, pts[n].second, colour, sr.hollow.empty() || !sr.hollow[n]);
    const double ly = f.top + 18.0 * q + 10.0;
    doc.line(f.width - f.right + 15, ly, f.width - f.right + 35, ly, "legend", colour, 2.0);
    doc.text(f.width - f.right + 40, ly + 4, sr.name, "start");
  }
  return doc.finish();
}

/// Passengers on board per segment, one curve per segment across trains.
inline std::string render_occupancy(const FlowState& fs, const Line& line) {
  std::vector<Series> series;
  for (int seg = 0; seg + 1 < fs.stations(); ++seg) {
    Series sr{line.station_names[seg] + " - " + line.station_names[seg + 1], {}, {}, {}};
    for (int q = 0; q < fs.trains(); ++q) {
      sr.x.push_back(q + 1);
      sr.y.push_back(fs.occupancy(q, seg));
    }
    series.push_back(std::move(sr));
  }
  return line_chart("Occupancy per segment", "train", "passengers", series, true);
}

/// LF, VLF and HLF per active train.
inline std::string render_load_factors(const TimetableMetrics& m) {
  Series lf{"LF", {}, {}, {}}, vlf{"VLF", {}, {}, {}}, hlf{"HLF", {}, {}, {}};
  for (std::size_t q = 0; q < m.trains.size(); ++q) {
    for (auto* s : {&lf, &vlf, &hlf}) s->x.push_back(static_cast<double>(q + 1));
    lf.y.push_back(m.trains[q].lf);
    vlf.y.push_back(m.trains[q].vlf);
    hlf.y.push_back(m.trains[q].hlf);
  }
  return line_chart("Load factors", "train", "load factor", {lf, vlf, hlf}, true);
}

/// One train-count/AWT curve per capacity level; dominated points hollow.
inline std::string render_pareto(const std::vector<ParetoPoint>& pts, std::string_view level_unit) {
  std::vector<Series> series;
  std::vector<int> levels;
  for (const auto& p : pts)
    if (std::find(levels.begin(), levels.end(), p.capacity_level) == levels.end()) levels.push_back(p.capacity_level);
  for (int level : levels) {
    Series sr{fmt::format("{} {}", level, level_unit), {}, {}, {}};
    for (const auto& p : pts) {
      if (p.capacity_level != level) continue;
      sr.x.push_back(p.train_count);
      sr.y.push_back(p.awt);
      sr.hollow.push_back(p.dominated);
    }
    series.push_back(std::move(sr));
  }
  return line_chart("Train count against AWT", "trains", "AWT (min)", series, true);
}

}  // namespace railtt::svg

#endif  // RAILTT_SVG_HPP
