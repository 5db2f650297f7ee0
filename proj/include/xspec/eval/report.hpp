#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xspec/eval/det.hpp"

namespace xspec::eval {

struct MetricRow {
  std::string scenario;
  std::string comparator;
  double eer = 0;
  GarAtFar gar_1{};    // FAR target 1%
  GarAtFar gar_01{};   // FAR target 0.1%
  std::size_t genuine = 0;
  std::size_t impostor = 0;
};

MetricRow evaluate(const std::string& scenario, const std::string& comparator, std::span<const double> genuine,
                   std::span<const double> impostor);

// "threshold,far,frr" with a header row.
std::string det_csv(const DetCurve& curve);

// Fixed-width table: scenario, comparator, EER, GAR@FAR=1%, GAR@FAR=0.1%
// (percentages) and the trial counts.
std::string summary_text(const std::vector<MetricRow>& rows);

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// DET curves on log-log axes (FAR vs FRR, 0.1% .. 100%).
std::string svg_det_plot(const std::string& title, const std::vector<std::pair<std::string, DetCurve>>& curves);

// Generic line chart, e.g. training losses per epoch.
std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series);

}  // namespace xspec::eval
