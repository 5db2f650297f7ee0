#include "xspec/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace xspec::eval {

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Frame {
  double left = 70, top = 40, width = 440, height = 340;
};

std::string svg_header(const std::string& title, const Frame& f) {
  std::string out =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"440\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n<rect width=\"720\" height=\"440\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt("%.1f", f.left + f.width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(title) + "</text>\n";
  out += "<rect x=\"" + fmt("%.1f", f.left) + "\" y=\"" + fmt("%.1f", f.top) + "\" width=\"" +
         fmt("%.1f", f.width) + "\" height=\"" + fmt("%.1f", f.height) + "\" fill=\"none\" stroke=\"black\"/>\n";
  return out;
}

std::string legend(const std::vector<std::string>& labels, const Frame& f) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = f.top + 10 + 18.0 * static_cast<double>(i);
    const double x = f.left + f.width + 15;
    out += "<line x1=\"" + fmt("%.1f", x) + "\" y1=\"" + fmt("%.1f", y) + "\" x2=\"" + fmt("%.1f", x + 20) +
           "\" y2=\"" + fmt("%.1f", y) + "\" stroke=\"" + kPalette[i % 10] + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + fmt("%.1f", x + 26) + "\" y=\"" + fmt("%.1f", y + 4) + "\">" + escape(labels[i]) +
           "</text>\n";
  }
  return out;
}

std::string polyline(const std::vector<std::pair<double, double>>& pts, std::size_t color) {
  std::string out = "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" + std::string(kPalette[color % 10]) +
                    "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ' ';
    out += fmt("%.2f", pts[i].first) + "," + fmt("%.2f", pts[i].second);
  }
  return out + "\"/>\n";
}

}  // namespace

MetricRow evaluate(const std::string& scenario, const std::string& comparator, std::span<const double> genuine,
                   std::span<const double> impostor) {
  const DetCurve curve = compute_det(genuine, impostor);
  MetricRow row;
  row.scenario = scenario;
  row.comparator = comparator;
  row.eer = eer(curve);
  row.gar_1 = gar_at_far(curve, 0.01);
  row.gar_01 = gar_at_far(curve, 0.001);
  row.genuine = genuine.size();
  row.impostor = impostor.size();
  return row;
}

std::string det_csv(const DetCurve& curve) {
  std::string out = "threshold,far,frr\n";
  for (const auto& p : curve.points) {
    const std::string t = std::isinf(p.threshold) ? (p.threshold < 0 ? "-inf" : "inf") : fmt("%.17g", p.threshold);
    out += t + "," + fmt("%.17g", p.far) + "," + fmt("%.17g", p.frr) + "\n";
  }
  return out;
}

std::string summary_text(const std::vector<MetricRow>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %-14s %8s %14s %16s %8s %9s\n", "scenario", "comparator", "EER(%)",
                "GAR@FAR=1%", "GAR@FAR=0.1%", "genuine", "impostor");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-16s %-14s %8.3f %14.3f %16.3f %8zu %9zu\n", r.scenario.c_str(),
                  r.comparator.c_str(), 100.0 * r.eer, 100.0 * r.gar_1.gar, 100.0 * r.gar_01.gar, r.genuine,
                  r.impostor);
    out += line;
  }
  return out;
}

std::string svg_det_plot(const std::string& title, const std::vector<std::pair<std::string, DetCurve>>& curves) {
  const Frame f;
  const double lo = -3.0, hi = 0.0;  // log10 range
  auto px = [&](double v) { return f.left + (std::log10(std::max(v, 1e-3)) - lo) / (hi - lo) * f.width; };
  auto py = [&](double v) { return f.top + f.height - (std::log10(std::max(v, 1e-3)) - lo) / (hi - lo) * f.height; };

  std::string out = svg_header(title, f);
  for (int e = -3; e <= 0; ++e) {
    const double v = std::pow(10.0, e);
    const std::string label = fmt("%g%%", 100.0 * v);
    out += "<line x1=\"" + fmt("%.1f", px(v)) + "\" y1=\"" + fmt("%.1f", f.top) + "\" x2=\"" + fmt("%.1f", px(v)) +
           "\" y2=\"" + fmt("%.1f", f.top + f.height) + "\" stroke=\"#ddd\"/>\n";
    out += "<line x1=\"" + fmt("%.1f", f.left) + "\" y1=\"" + fmt("%.1f", py(v)) + "\" x2=\"" +
           fmt("%.1f", f.left + f.width) + "\" y2=\"" + fmt("%.1f", py(v)) + "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + fmt("%.1f", px(v)) + "\" y=\"" + fmt("%.1f", f.top + f.height + 16) +
           "\" text-anchor=\"middle\">" + label + "</text>\n";
    out += "<text x=\"" + fmt("%.1f", f.left - 6) + "\" y=\"" + fmt("%.1f", py(v) + 4) + "\" text-anchor=\"end\">" +
           label + "</text>\n";
  }
  out += "<text x=\"" + fmt("%.1f", f.left + f.width / 2) + "\" y=\"" + fmt("%.1f", f.top + f.height + 34) +
         "\" text-anchor=\"middle\">False Acceptance Rate</text>\n";
  out += "<text transform=\"translate(18," + fmt("%.1f", f.top + f.height / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">False Rejection Rate</text>\n";

  std::vector<std::string> labels;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : curves[i].second.points) pts.emplace_back(px(p.far), py(p.frr));
    out += polyline(pts, i);
    labels.push_back(curves[i].first);
  }
  out += legend(labels, f);
  return out + "</svg>\n";
}

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series) {
  const Frame f;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  y0 = std::min(y0, 0.0);
  auto px = [&](double v) { return f.left + (v - x0) / (x1 - x0) * f.width; };
  auto py = [&](double v) { return f.top + f.height - (v - y0) / (y1 - y0) * f.height; };

  std::string out = svg_header(title, f);
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    out += "<text x=\"" + fmt("%.1f", px(xv)) + "\" y=\"" + fmt("%.1f", f.top + f.height + 16) +
           "\" text-anchor=\"middle\">" + fmt("%.3g", xv) + "</text>\n";
    out += "<text x=\"" + fmt("%.1f", f.left - 6) + "\" y=\"" + fmt("%.1f", py(yv) + 4) +
           "\" text-anchor=\"end\">" + fmt("%.3g", yv) + "</text>\n";
  }
  out += "<text x=\"" + fmt("%.1f", f.left + f.width / 2) + "\" y=\"" + fmt("%.1f", f.top + f.height + 34) +
         "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
  out += "<text transform=\"translate(18," + fmt("%.1f", f.top + f.height / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + escape(y_label) + "</text>\n";
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [x, y] : series[i].points)
      if (std::isfinite(x) && std::isfinite(y)) pts.emplace_back(px(x), py(y));
    out += polyline(pts, i);
    labels.push_back(series[i].label);
  }
  out += legend(labels, f);
  return out + "</svg>\n";
}

}  // namespace xspec::eval
