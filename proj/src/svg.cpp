#include "floodal/svg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "floodal/errors.hpp"

namespace floodal {

SvgDocument::SvgDocument(double width, double height)
    : width_(width), height_(height) {}

std::string SvgDocument::num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string SvgDocument::escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

void SvgDocument::open_group(const std::string& id) {
  body_ << "<g id=\"" << escape(id) << "\">\n";
}

void SvgDocument::close_group() { body_ << "</g>\n"; }

void SvgDocument::line(double x1, double y1, double x2, double y2,
                       const std::string& stroke, double stroke_width,
                       const std::string& dash) {
  body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\""
        << num(x2) << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke
        << "\" stroke-width=\"" << num(stroke_width) << "\"";
  if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
  body_ << "/>\n";
}

void SvgDocument::polyline(const std::vector<std::pair<double, double>>& points,
                           const std::string& stroke, double stroke_width,
                           const std::string& fill) {
  if (points.empty()) return;
  body_ << "<path d=\"";
  for (std::size_t i = 0; i < points.size(); ++i)
    body_ << (i == 0 ? "M" : "L") << num(points[i].first) << ' '
          << num(points[i].second);
  body_ << "\" fill=\"" << fill << "\" stroke=\"" << stroke
        << "\" stroke-width=\"" << num(stroke_width) << "\"/>\n";
}

void SvgDocument::circle(double cx, double cy, double r,
                         const std::string& fill) {
  body_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\""
        << num(r) << "\" fill=\"" << fill << "\"/>\n";
}

void SvgDocument::rect(double x, double y, double w, double h,
                       const std::string& fill, const std::string& stroke) {
  body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
        << num(w) << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"";
  if (!stroke.empty()) body_ << " stroke=\"" << stroke << "\"";
  body_ << "/>\n";
}

void SvgDocument::text(double x, double y, const std::string& content,
                       double size, const std::string& anchor,
                       const std::string& fill) {
  body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y)
        << "\" font-family=\"sans-serif\" font-size=\"" << num(size)
        << "\" text-anchor=\"" << anchor << "\" fill=\"" << fill << "\">"
        << escape(content) << "</text>\n";
}

std::string SvgDocument::str() const {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_)
      << "\" height=\"" << num(height_) << "\" viewBox=\"0 0 " << num(width_)
      << ' ' << num(height_) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << num(width_) << "\" height=\""
      << num(height_) << "\" fill=\"#ffffff\"/>\n"
      << body_.str() << "</svg>\n";
  return out.str();
}

void SvgDocument::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write SVG: " + path.string());
  out << str();
}

std::vector<double> nice_ticks(double lo, double hi, int target) {
  std::vector<double> ticks;
  if (!(hi > lo)) {
    ticks.push_back(lo);
    return ticks;
  }
  const double raw_step = (hi - lo) / std::max(1, target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
  double step = mag;
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * mult >= raw_step) {
      step = mag * mult;
      break;
    }
  }
  const double first = std::ceil(lo / step) * step;
  for (double t = first; t <= hi + step * 1e-9; t += step)
    ticks.push_back(std::fabs(t) < step * 1e-9 ? 0.0 : t);
  return ticks;
}

std::string format_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void draw_axes(SvgDocument& svg, const ChartArea& area,
               const std::string& x_label, const std::string& y_label,
               const std::string& title) {
  svg.open_group("axes");
  svg.line(area.left, area.bottom, area.right, area.bottom, "#000000", 1.0);
  svg.line(area.left, area.bottom, area.left, area.top, "#000000", 1.0);
  for (double t : nice_ticks(area.x_min, area.x_max)) {
    const double x = area.sx(t);
    svg.line(x, area.bottom, x, area.bottom + 4, "#000000", 1.0);
    svg.text(x, area.bottom + 18, format_tick(t), 11, "middle");
  }
  for (double t : nice_ticks(area.y_min, area.y_max)) {
    const double y = area.sy(t);
    svg.line(area.left - 4, y, area.left, y, "#000000", 1.0);
    svg.text(area.left - 8, y + 4, format_tick(t), 11, "end");
  }
  svg.text((area.left + area.right) / 2, area.bottom + 36, x_label, 13,
           "middle");
  // vertical label drawn horizontally above the axis to keep the writer small
  svg.text(area.left, area.top - 10, y_label, 13, "start");
  if (!title.empty())
    svg.text((area.left + area.right) / 2, area.top - 14, title, 15, "middle");
  svg.close_group();
}

}  // namespace floodal
