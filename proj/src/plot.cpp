#include "gpfunnel/plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace gpfunnel {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

// Maps data coordinates into a pixel rectangle (y grows downwards in SVG).
struct Frame {
  double left, top, width, height;
  double x0, x1, y0, y1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
  double py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
};

std::string header(double w, double h) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      w, h);
}

// Roughly five round tick values across [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
    out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return out;
}

std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::string s = fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
      f.left, f.top, f.width, f.height);
  for (double v : ticks(f.x0, f.x1)) {
    const double x = f.px(v);
    s += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", x,
                     f.top + f.height, f.top + f.height + 4);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:g}</text>\n", x,
                     f.top + f.height + 17, v);
  }
  for (double v : ticks(f.y0, f.y1)) {
    const double y = f.py(v);
    s += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n",
                     f.left - 4, y, f.left);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:g}</text>\n", f.left - 7, y + 4, v);
  }
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", f.left + f.width / 2,
                   f.top + f.height + 34, xlabel);
  s += fmt::format(
      "<text x=\"{0:.2f}\" y=\"{1:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 {0:.2f} {1:.2f})\">{2}</text>\n",
      f.left - 40, f.top + f.height / 2, ylabel);
  return s;
}

// Long runs are thinned to about `max_points` vertices; the shape at plot scale is unchanged.
std::string polyline(const std::vector<std::pair<double, double>>& pts, const Frame& f, const std::string& style,
                     std::size_t max_points = 2000) {
  if (pts.empty()) return {};
  const std::size_t stride = std::max<std::size_t>(1, pts.size() / max_points);
  std::string s = "<polyline fill=\"none\" " + style + " points=\"";
  for (std::size_t k = 0; k < pts.size(); k += stride) {
    s += fmt::format("{:.2f},{:.2f} ", f.px(pts[k].first), f.py(pts[k].second));
  }
  s += fmt::format("{:.2f},{:.2f}\"/>\n", f.px(pts.back().first), f.py(pts.back().second));
  return s;
}

std::string box_rect(const StateBox& b, const Frame& f, const std::string& style) {
  return fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" {}/>\n", f.px(b.lower()[0]),
                     f.py(b.upper()[1]), f.px(b.upper()[0]) - f.px(b.lower()[0]),
                     f.py(b.lower()[1]) - f.py(b.upper()[1]), style);
}

}  // namespace

std::string plot_state_space(const std::vector<Trajectory>& runs, const StateBox& start, const StateBox& goal,
                             const StateBox& view) {
  if (view.dim() < 2) throw DomainError("state-space plot needs at least two coordinates");
  const Frame f{60, 20, 460, 460, view.lower()[0], view.upper()[0], view.lower()[1], view.upper()[1]};
  std::string s = header(540, 540);
  s += box_rect(start, f, "fill=\"#1f77b4\" fill-opacity=\"0.15\" stroke=\"#1f77b4\"");
  s += box_rect(goal, f, "fill=\"#2ca02c\" fill-opacity=\"0.15\" stroke=\"#2ca02c\"");
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">start</text>\n", f.px(start.lower()[0]) + 3,
                   f.py(start.upper()[1]) - 4);
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">goal</text>\n", f.px(goal.lower()[0]) + 3,
                   f.py(goal.upper()[1]) - 4);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& x : runs[r].states) pts.emplace_back(x[0], x[1]);
    const char* color = kPalette[r % std::size(kPalette)];
    s += polyline(pts, f, fmt::format("stroke=\"{}\" stroke-width=\"1.2\"", color));
    if (!pts.empty()) {
      s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n", f.px(pts.front().first),
                       f.py(pts.front().second), color);
    }
  }
  s += axes(f, "x1", "x2");
  return s + "</svg>\n";
}

std::string plot_funnel_time(const std::vector<Trajectory>& runs, const FunnelSpec& spec, double t_max) {
  const Index n = spec.dim();
  double t_end = 0.0;
  for (const auto& r : runs) {
    if (r.size()) t_end = std::max(t_end, r.times.back());
  }
  if (!(t_end > 0.0)) t_end = t_max;
  const double panel = 220;
  std::string s = header(620, 30 + panel * static_cast<double>(n));
  constexpr int samples = 400;
  for (Index i = 0; i < n; ++i) {
    double lo = spec.interval(i, 0.0).lo;
    double hi = spec.interval(i, 0.0).hi;
    for (const auto& r : runs) {
      for (const auto& x : r.states) {
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
      }
    }
    const double pad = 0.05 * (hi - lo);
    const Frame f{70, 15 + panel * static_cast<double>(i), 520, panel - 60, 0.0, t_end, lo - pad, hi + pad};
    std::vector<std::pair<double, double>> lower, upper, centre;
    for (int k = 0; k <= samples; ++k) {
      const double t = t_end * k / samples;
      lower.emplace_back(t, spec.interval(i, t).lo);
      upper.emplace_back(t, spec.interval(i, t).hi);
      centre.emplace_back(t, spec.attractor[i]);
    }
    s += polyline(lower, f, "stroke=\"black\" stroke-width=\"1.5\"");
    s += polyline(upper, f, "stroke=\"black\" stroke-width=\"1.5\"");
    s += polyline(centre, f, "stroke=\"gray\" stroke-dasharray=\"4 3\"");
    for (std::size_t r = 0; r < runs.size(); ++r) {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t k = 0; k < runs[r].size(); ++k) pts.emplace_back(runs[r].times[k], runs[r].states[k][i]);
      s += polyline(pts, f, fmt::format("stroke=\"{}\" stroke-width=\"1\"", kPalette[r % std::size(kPalette)]));
    }
    s += axes(f, "t", fmt::format("x{}", i + 1));
  }
  return s + "</svg>\n";
}

}  // namespace gpfunnel
