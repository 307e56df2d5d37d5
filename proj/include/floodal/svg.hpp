#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace floodal {

/// Minimal SVG builder; numbers render with three decimals so identical
/// inputs produce identical bytes.
class SvgDocument {
 public:
  SvgDocument(double width, double height);

  void open_group(const std::string& id);
  void close_group();
  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke, double stroke_width = 1.0,
            const std::string& dash = "");
  void polyline(const std::vector<std::pair<double, double>>& points,
                const std::string& stroke, double stroke_width = 1.0,
                const std::string& fill = "none");
  void circle(double cx, double cy, double r, const std::string& fill);
  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "");
  void text(double x, double y, const std::string& content, double size = 12.0,
            const std::string& anchor = "start",
            const std::string& fill = "#000000");

  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  static std::string num(double v);
  static std::string escape(const std::string& s);
  double width_, height_;
  std::ostringstream body_;
};

/// Linear data-to-pixel mapping for a chart area (SVG y axis points down).
struct ChartArea {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  double left = 60.0, right = 610.0, top = 40.0, bottom = 430.0;

  double sx(double x) const {
    return left + (x - x_min) / (x_max - x_min) * (right - left);
  }
  double sy(double y) const {
    return bottom - (y - y_min) / (y_max - y_min) * (bottom - top);
  }
};

/// Round tick positions covering [lo,hi] with a 1/2/5 step.
std::vector<double> nice_ticks(double lo, double hi, int target = 6);

std::string format_tick(double v);

/// Axis frame, ticks, tick labels and axis labels for a chart.
void draw_axes(SvgDocument& svg, const ChartArea& area,
               const std::string& x_label, const std::string& y_label,
               const std::string& title = "");

}  // namespace floodal
