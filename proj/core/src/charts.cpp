#include "dml/charts.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "dml/diagnostics.hpp"
#include "dml/error.hpp"

namespace dml {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMarginLeft = 64.0;
constexpr double kMarginRight = 16.0;
constexpr double kMarginTop = 24.0;
constexpr double kMarginBottom = 48.0;

struct Series {
  std::string name;
  std::vector<double> y;
};

std::string svg_chart(const Series& s, const std::string& y_label) {
  const std::size_t n = s.y.size();
  double y_min = *std::min_element(s.y.begin(), s.y.end());
  double y_max = *std::max_element(s.y.begin(), s.y.end());
  if (y_min == y_max) {
    // Constant series still needs a nonzero range to land mid-chart.
    y_min -= 1.0;
    y_max += 1.0;
  }
  const double x_min = 0.0;
  const double x_max = n > 1 ? static_cast<double>(n - 1) : 1.0;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto x_px = [&](double e) { return kMarginLeft + (e - x_min) / (x_max - x_min) * plot_w; };
  auto y_px = [&](double v) {
    return kMarginTop + (y_max - v) / (y_max - y_min) * plot_h;
  };

  std::string points;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) points += ' ';
    points += format_double(x_px(static_cast<double>(i))) + "," + format_double(y_px(s.y[i]));
  }

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
         "viewBox=\"0 0 640 400\">\n";
  out += "  <rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  // axes
  out += "  <line x1=\"" + format_double(kMarginLeft) + "\" y1=\"" + format_double(kMarginTop) +
         "\" x2=\"" + format_double(kMarginLeft) + "\" y2=\"" +
         format_double(kHeight - kMarginBottom) + "\" stroke=\"black\"/>\n";
  out += "  <line x1=\"" + format_double(kMarginLeft) + "\" y1=\"" +
         format_double(kHeight - kMarginBottom) + "\" x2=\"" +
         format_double(kWidth - kMarginRight) + "\" y2=\"" +
         format_double(kHeight - kMarginBottom) + "\" stroke=\"black\"/>\n";
  // y tick labels (min, max)
  out += "  <text x=\"8\" y=\"" + format_double(kMarginTop + 4) +
         "\" font-size=\"11\">" + format_double(y_max) + "</text>\n";
  out += "  <text x=\"8\" y=\"" + format_double(kHeight - kMarginBottom + 4) +
         "\" font-size=\"11\">" + format_double(y_min) + "</text>\n";
  // x tick labels (first, last epoch)
  out += "  <text x=\"" + format_double(kMarginLeft - 4) + "\" y=\"" +
         format_double(kHeight - kMarginBottom + 16) + "\" font-size=\"11\">0</text>\n";
  out += "  <text x=\"" + format_double(kWidth - kMarginRight - 16) + "\" y=\"" +
         format_double(kHeight - kMarginBottom + 16) + "\" font-size=\"11\">" +
         std::to_string(n > 0 ? n - 1 : 0) + "</text>\n";
  // axis titles
  out += "  <text x=\"" + format_double(kWidth / 2 - 20) + "\" y=\"" +
         format_double(kHeight - 12) + "\" font-size=\"13\">epoch</text>\n";
  out += "  <text x=\"12\" y=\"14\" font-size=\"13\">" + y_label + "</text>\n";
  out += "  <polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\" points=\"" + points +
         "\"/>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace

double symlog_value(double v, double theta) {
  const double sign = v < 0.0 ? -1.0 : 1.0;
  if (v == 0.0) return 0.0;
  return sign * std::log(1.0 + std::abs(v) / theta);
}

void render_charts(const std::string& log_csv_path, const std::string& out_dir, bool symlog) {
  const TrainLog log = read_train_log_csv(log_csv_path);
  if (log.epochs.empty()) throw DataError(log_csv_path + ": no epoch rows to plot");
  std::filesystem::create_directories(out_dir);

  std::vector<Series> series(3);
  series[0].name = "loss";
  series[1].name = "active_ratio";
  series[2].name = "grad_norm";
  for (const auto& e : log.epochs) {
    series[0].y.push_back(e.loss);
    series[1].y.push_back(e.active_ratio);
    series[2].y.push_back(e.grad_norm);
  }
  for (auto& s : series) {
    std::string label = s.name;
    if (symlog) {
      for (double& v : s.y) v = symlog_value(v);
      label = "symlog(" + s.name + ")";
    }
    const std::string path = (std::filesystem::path(out_dir) / (s.name + ".svg")).string();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open '" + path + "' for writing");
    f << svg_chart(s, label);
  }
}

}  // namespace dml
