#include "seqot/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace seqot::svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo <= 1e-300) {
      const double pad = std::max(1.0, std::abs(lo)) * 0.5;
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string render(const Plot& p) {
  const double left = 70, right = 150, top = 40, bottom = 50;
  const double w = p.width - left - right, h = p.height - top - bottom;
  Range xr, yr;
  for (const auto& s : p.series) {
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      xr.add(s.x[k]);
      yr.add(s.y[k]);
    }
  }
  xr.settle();
  yr.settle();
  auto sx = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * w; };
  auto sy = [&](double y) { return top + h - (y - yr.lo) / (yr.hi - yr.lo) * h; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << p.width << "\" height=\"" << p.height
    << "\" viewBox=\"0 0 " << p.width << ' ' << p.height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << px(left + w / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(p.title)
    << "</text>\n";
  o << "<rect x=\"" << px(left) << "\" y=\"" << px(top) << "\" width=\"" << px(w) << "\" height=\"" << px(h)
    << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xr.lo + (xr.hi - xr.lo) * k / 4.0, fy = yr.lo + (yr.hi - yr.lo) * k / 4.0;
    o << "<line x1=\"" << px(sx(fx)) << "\" y1=\"" << px(top + h) << "\" x2=\"" << px(sx(fx)) << "\" y2=\""
      << px(top + h + 5) << "\" stroke=\"#333\"/>";
    o << "<text x=\"" << px(sx(fx)) << "\" y=\"" << px(top + h + 18) << "\" text-anchor=\"middle\">" << num(fx)
      << "</text>\n";
    o << "<line x1=\"" << px(left - 5) << "\" y1=\"" << px(sy(fy)) << "\" x2=\"" << px(left) << "\" y2=\""
      << px(sy(fy)) << "\" stroke=\"#333\"/>";
    o << "<text x=\"" << px(left - 8) << "\" y=\"" << px(sy(fy) + 4) << "\" text-anchor=\"end\">" << num(fy)
      << "</text>\n";
  }
  o << "<text x=\"" << px(left + w / 2) << "\" y=\"" << px(p.height - 10.0) << "\" text-anchor=\"middle\">"
    << escape(p.x_label) << "</text>\n";
  o << "<text x=\"15\" y=\"" << px(top + h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
    << px(top + h / 2) << ")\">" << escape(p.y_label) << "</text>\n";

  for (std::size_t s = 0; s < p.series.size(); ++s) {
    const auto& ser = p.series[s];
    const char* colour = kPalette[s % std::size(kPalette)];
    std::ostringstream pts;
    std::size_t count = 0;
    for (std::size_t k = 0; k < std::min(ser.x.size(), ser.y.size()); ++k) {
      if (!std::isfinite(ser.x[k]) || !std::isfinite(ser.y[k])) continue;
      pts << (count++ ? " " : "") << px(sx(ser.x[k])) << ',' << px(sy(ser.y[k]));
      if (!ser.line || ser.x.size() == 1)
        o << "<circle cx=\"" << px(sx(ser.x[k])) << "\" cy=\"" << px(sy(ser.y[k])) << "\" r=\"3\" fill=\"" << colour
          << "\"/>\n";
    }
    if (ser.line && count > 1)
      o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"" << pts.str()
        << "\"/>\n";
    const double ly = top + 10 + 18.0 * static_cast<double>(s);
    o << "<rect x=\"" << px(left + w + 12) << "\" y=\"" << px(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
      << colour << "\"/>";
    o << "<text x=\"" << px(left + w + 26) << "\" y=\"" << px(ly + 1) << "\">" << escape(ser.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace seqot::svg
