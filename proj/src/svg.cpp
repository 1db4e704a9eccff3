#include "hrsi/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace hrsi {

namespace {

constexpr double kPanelW = 460.0, kPanelH = 320.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 34.0, kBottom = 48.0;

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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Comment bodies must not contain "--".
std::string comment_safe(std::string s) {
  for (std::size_t p = s.find("--"); p != std::string::npos; p = s.find("--")) s.replace(p, 2, "- ");
  return s;
}

struct Axis {
  bool log = false;
  double lo = 0.0, hi = 1.0;

  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
  double map(double v) const { return log ? std::log10(v) : v; }

  void fit(const std::vector<double>& values) {
    double a = std::numeric_limits<double>::infinity(), b = -a;
    for (double v : values)
      if (usable(v)) {
        a = std::min(a, map(v));
        b = std::max(b, map(v));
      }
    if (!std::isfinite(a)) a = 0.0, b = 1.0;
    if (b - a < 1e-12 * std::max(1.0, std::abs(a))) {
      const double pad = log ? 0.5 : std::max(0.5, 0.1 * std::abs(a));
      a -= pad;
      b += pad;
    }
    lo = a;
    hi = b;
  }

  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (double d = std::ceil(lo); d <= std::floor(hi) + 1e-9; d += 1.0) t.push_back(d);
      if (t.size() >= 2) return t;
      t.clear();
    }
    for (int k = 0; k <= 4; ++k) t.push_back(lo + (hi - lo) * k / 4.0);
    return t;
  }

  std::string label(double mapped) const {
    if (log && std::abs(mapped - std::round(mapped)) < 1e-9) return "1e" + num(std::round(mapped));
    return num(log ? std::pow(10.0, mapped) : mapped);
  }
};

}  // namespace

std::string render_svg(const std::vector<Panel>& panels, std::size_t columns) {
  columns = std::max<std::size_t>(1, std::min(columns, std::max<std::size_t>(1, panels.size())));
  const std::size_t rows = (panels.size() + columns - 1) / columns;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kPanelW * columns)
     << "\" height=\"" << num(kPanelH * std::max<std::size_t>(rows, 1))
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel& panel = panels[p];
    const double ox = kPanelW * (p % columns), oy = kPanelH * (p / columns);
    const double w = kPanelW - kLeft - kRight, h = kPanelH - kTop - kBottom;
    Axis ax{panel.log_x}, ay{panel.log_y};
    std::vector<double> xs, ys;
    for (const auto& s : panel.series) {
      xs.insert(xs.end(), s.x.begin(), s.x.end());
      ys.insert(ys.end(), s.y.begin(), s.y.end());
    }
    ax.fit(xs);
    ay.fit(ys);
    auto px = [&](double v) { return ox + kLeft + (ax.map(v) - ax.lo) / (ax.hi - ax.lo) * w; };
    auto py = [&](double v) { return oy + kTop + h - (ay.map(v) - ay.lo) / (ay.hi - ay.lo) * h; };

    os << "<g>\n<text x=\"" << num(ox + kLeft + w / 2) << "\" y=\"" << num(oy + 20)
       << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(panel.title) << "</text>\n";
    os << "<rect x=\"" << num(ox + kLeft) << "\" y=\"" << num(oy + kTop) << "\" width=\"" << num(w)
       << "\" height=\"" << num(h) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (double t : ax.ticks()) {
      const double x = ox + kLeft + (t - ax.lo) / (ax.hi - ax.lo) * w;
      os << "<line x1=\"" << num(x) << "\" y1=\"" << num(oy + kTop + h) << "\" x2=\"" << num(x)
         << "\" y2=\"" << num(oy + kTop + h + 4) << "\" stroke=\"#333\"/>"
         << "<text x=\"" << num(x) << "\" y=\"" << num(oy + kTop + h + 16)
         << "\" text-anchor=\"middle\">" << escape(ax.label(t)) << "</text>\n";
    }
    for (double t : ay.ticks()) {
      const double y = oy + kTop + h - (t - ay.lo) / (ay.hi - ay.lo) * h;
      os << "<line x1=\"" << num(ox + kLeft - 4) << "\" y1=\"" << num(y) << "\" x2=\""
         << num(ox + kLeft) << "\" y2=\"" << num(y) << "\" stroke=\"#333\"/>"
         << "<text x=\"" << num(ox + kLeft - 6) << "\" y=\"" << num(y + 4)
         << "\" text-anchor=\"end\">" << escape(ay.label(t)) << "</text>\n";
    }
    os << "<text x=\"" << num(ox + kLeft + w / 2) << "\" y=\"" << num(oy + kPanelH - 12)
       << "\" text-anchor=\"middle\">" << escape(panel.xlabel) << "</text>\n";
    os << "<text transform=\"translate(" << num(ox + 14) << "," << num(oy + kTop + h / 2)
       << ") rotate(-90)\" text-anchor=\"middle\">" << escape(panel.ylabel) << "</text>\n";

    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const Series& s = panel.series[si];
      os << "<!-- series \"" << comment_safe(s.label) << "\":";
      for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k)
        os << ' ' << num(s.x[k]) << ',' << num(s.y[k]);
      os << " -->\n";
      std::string path;
      bool pen_down = false;
      for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
        if (!ax.usable(s.x[k]) || !ay.usable(s.y[k])) {
          pen_down = false;
          continue;
        }
        path += (pen_down ? " L" : " M") + num(px(s.x[k])) + "," + num(py(s.y[k]));
        pen_down = true;
        if (s.markers)
          os << "<circle cx=\"" << num(px(s.x[k])) << "\" cy=\"" << num(py(s.y[k]))
             << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
      }
      if (!path.empty())
        os << "<path d=\"" << path.substr(1) << "\" fill=\"none\" stroke=\"" << s.color
           << "\" stroke-width=\"1.5\"/>\n";
      const double ly = oy + kTop + 14 + 14.0 * si;
      os << "<line x1=\"" << num(ox + kLeft + w - 110) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
         << num(ox + kLeft + w - 92) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << s.color
         << "\" stroke-width=\"2\"/><text x=\"" << num(ox + kLeft + w - 88) << "\" y=\"" << num(ly)
         << "\">" << escape(s.label) << "</text>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace hrsi
