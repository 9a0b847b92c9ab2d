#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace degkit::svg {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
const char* const kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string header(const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) +
       "</text>\n";
  return s;
}

struct Range {
  double lo, hi;
  double map(double v, double a, double b) const { return hi > lo ? a + (v - lo) / (hi - lo) * (b - a) : (a + b) / 2; }
};

Range padded(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

// Axes with four ticks on y (and x when given).
std::string axes(const Range& y, const Range* x, const std::string& x_label, const std::string& y_label) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  std::string s = "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) +
                  "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) +
       "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = y.lo + (y.hi - y.lo) * t / 4.0;
    const double py = y.map(v, y0, y1);
    s += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(py + 4) + "\" text-anchor=\"end\">" + num(v) + "</text>\n";
    s += "<line x1=\"" + num(x0 - 3) + "\" y1=\"" + num(py) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(py) +
         "\" stroke=\"black\"/>\n";
    if (x) {
      const double u = x->lo + (x->hi - x->lo) * t / 4.0;
      const double px = x->map(u, x0, x1);
      s += "<text x=\"" + num(px) + "\" y=\"" + num(y0 + 16) + "\" text-anchor=\"middle\">" + num(u) + "</text>\n";
    }
  }
  s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 12) + "\" text-anchor=\"middle\">" +
       escape(x_label) + "</text>\n";
  s += "<text transform=\"translate(16," + num((y0 + y1) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       escape(y_label) + "</text>\n";
  return s;
}

}  // namespace

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

std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<Series>& series, const std::string& y_label) {
  double lo = 0.0, hi = 0.0;
  for (const auto& s : series)
    for (double v : s.values)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  const Range y = padded(lo, hi);
  std::string s = header(title) + axes(y, nullptr, "", y_label);
  const double x0 = kLeft, x1 = kWidth - kRight, base = y.map(0.0, kHeight - kBottom, kTop);
  const double group = (x1 - x0) / std::max<std::size_t>(categories.size(), 1);
  const double bar = 0.8 * group / std::max<std::size_t>(series.size(), 1);
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double gx = x0 + group * static_cast<double>(c) + 0.1 * group;
    for (std::size_t k = 0; k < series.size(); ++k) {
      const double v = c < series[k].values.size() ? series[k].values[c] : std::numeric_limits<double>::quiet_NaN();
      if (!std::isfinite(v)) continue;
      const double top = y.map(v, kHeight - kBottom, kTop);
      s += "<rect x=\"" + num(gx + bar * static_cast<double>(k)) + "\" y=\"" + num(std::min(top, base)) +
           "\" width=\"" + num(bar * 0.95) + "\" height=\"" + num(std::fabs(base - top)) + "\" fill=\"" +
           kPalette[k % std::size(kPalette)] + "\"><title>" + escape(series[k].name + " " + categories[c] + ": " + num(v)) +
           "</title></rect>\n";
    }
    s += "<text x=\"" + num(gx + 0.4 * group) + "\" y=\"" + num(kHeight - kBottom + 16) +
         "\" text-anchor=\"middle\">" + escape(categories[c]) + "</text>\n";
  }
  for (std::size_t k = 0; k < series.size() && series.size() > 1; ++k) {
    const double ly = kTop + 14.0 * static_cast<double>(k);
    s += "<rect x=\"" + num(kWidth - kRight - 130) + "\" y=\"" + num(ly - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
         kPalette[k % std::size(kPalette)] + "\"/>\n";
    s += "<text x=\"" + num(kWidth - kRight - 115) + "\" y=\"" + num(ly) + "\">" + escape(series[k].name) + "</text>\n";
  }
  return s + "</svg>\n";
}

std::string scatter(const std::string& title, const std::vector<double>& x, const std::vector<double>& y,
                    const std::string& x_label, const std::string& y_label) {
  auto span = [](const std::vector<double>& v) {
    if (v.empty()) return padded(0.0, 1.0);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return padded(*lo, *hi);
  };
  const Range rx = span(x), ry = span(y);
  std::string s = header(title) + axes(ry, &rx, x_label, y_label);
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
    s += "<circle cx=\"" + num(rx.map(x[i], kLeft, kWidth - kRight)) + "\" cy=\"" +
         num(ry.map(y[i], kHeight - kBottom, kTop)) + "\" r=\"3\" fill=\"" + kPalette[0] + "\" fill-opacity=\"0.7\"/>\n";
  return s + "</svg>\n";
}

}  // namespace degkit::svg
