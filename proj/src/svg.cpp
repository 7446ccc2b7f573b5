#include "mvp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mvp/common.hpp"

namespace mvp {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;  // room for the legend
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

class Canvas {
 public:
  Canvas(const std::string& title) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth) << "\" height=\""
         << fmt(kHeight) << "\" viewBox=\"0 0 " << fmt(kWidth) << ' ' << fmt(kHeight)
         << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out_ << "<rect x=\"0\" y=\"0\" width=\"" << fmt(kWidth) << "\" height=\"" << fmt(kHeight)
         << "\" fill=\"white\"/>\n";
    text(kWidth / 2.0, 22.0, title, "middle", 15);
  }

  void text(double x, double y, const std::string& s, const char* anchor, int size = 12,
            double rotate = 0.0) {
    out_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" text-anchor=\"" << anchor
         << "\" font-size=\"" << size << '"';
    if (rotate != 0.0) {
      out_ << " transform=\"rotate(" << fmt(rotate) << ' ' << fmt(x) << ' ' << fmt(y) << ")\"";
    }
    out_ << '>' << escape(s) << "</text>\n";
  }

  void line(double x1, double y1, double x2, double y2, const char* stroke, double width = 1.0) {
    out_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
         << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt(width)
         << "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const char* fill) {
    out_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
         << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\"/>\n";
  }

  void circle(double x, double y, double r, const char* fill) {
    out_ << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << fmt(r)
         << "\" fill=\"" << fill << "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke) {
    out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2.000\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) out_ << ' ';
      out_ << fmt(pts[i].first) << ',' << fmt(pts[i].second);
    }
    out_ << "\"/>\n";
  }

  void legend(const std::vector<std::string>& names) {
    const double x = kWidth - kRight + 20.0;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const double y = kTop + 10.0 + 20.0 * static_cast<double>(i);
      rect(x, y - 10.0, 12.0, 12.0, color(i));
      text(x + 18.0, y, names[i], "start");
    }
  }

  void y_axis(const std::string& label, double lo, double hi) {
    const double plot_h = kHeight - kTop - kBottom;
    line(kLeft, kTop, kLeft, kHeight - kBottom, "black");
    for (int k = 0; k <= 5; ++k) {
      const double v = lo + (hi - lo) * k / 5.0;
      const double y = kHeight - kBottom - plot_h * k / 5.0;
      line(kLeft - 4.0, y, kLeft, y, "black");
      line(kLeft, y, kWidth - kRight, y, "#dddddd", 0.5);
      text(kLeft - 8.0, y + 4.0, fmt(v, 2), "end");
    }
    text(18.0, kTop + plot_h / 2.0, label, "middle", 12, -90.0);
  }

  std::string str() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

}  // namespace

std::string grouped_bar_svg(const std::string& title, const std::string& y_label,
                            const std::vector<std::string>& categories,
                            const std::vector<BarSeries>& series, double y_max) {
  require(!categories.empty() && !series.empty(), "grouped_bar_svg: nothing to plot");
  require(y_max > 0.0, "grouped_bar_svg: y_max must be positive");
  for (const BarSeries& s : series) {
    require(s.values.size() == categories.size(),
            "grouped_bar_svg: series '" + s.name + "' does not match the category count");
    require(s.errors.empty() || s.errors.size() == s.values.size(),
            "grouped_bar_svg: series '" + s.name + "' has mismatched error bars");
  }

  Canvas c(title);
  c.y_axis(y_label, 0.0, y_max);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double group_w = plot_w / static_cast<double>(categories.size());
  const double bar_w = 0.8 * group_w / static_cast<double>(series.size());
  const auto to_y = [&](double v) {
    return kHeight - kBottom - plot_h * std::clamp(v / y_max, 0.0, 1.0);
  };

  c.line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, "black");
  for (std::size_t g = 0; g < categories.size(); ++g) {
    const double gx = kLeft + group_w * static_cast<double>(g) + 0.1 * group_w;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = series[s].values[g];
      const double x = gx + bar_w * static_cast<double>(s);
      const double y = to_y(v);
      c.rect(x, y, bar_w, kHeight - kBottom - y, color(s));
      if (!series[s].errors.empty()) {
        const double e = series[s].errors[g];
        const double cx = x + bar_w / 2.0;
        c.line(cx, to_y(v - e), cx, to_y(v + e), "black");
      }
    }
    c.text(kLeft + group_w * (static_cast<double>(g) + 0.5), kHeight - kBottom + 18.0,
           categories[g], "middle");
  }
  std::vector<std::string> names;
  for (const BarSeries& s : series) names.push_back(s.name);
  c.legend(names);
  return c.str();
}

std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<LineSeries>& series,
                          bool log_x, double y_min, double y_max) {
  require(!series.empty(), "line_plot_svg: nothing to plot");
  require(y_max > y_min, "line_plot_svg: empty y range");
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const LineSeries& s : series) {
    require(!s.x.empty() && s.x.size() == s.y.size(),
            "line_plot_svg: series '" + s.name + "' has mismatched or empty coordinates");
    require(s.errors.empty() || s.errors.size() == s.y.size(),
            "line_plot_svg: series '" + s.name + "' has mismatched error bars");
    for (double x : s.x) {
      if (log_x && x <= 0.0) continue;
      const double v = log_x ? std::log10(x) : x;
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  if (first) {  // log axis with no positive x
    lo = 0.0;
    hi = 1.0;
  }
  if (log_x) lo -= 0.5;  // leaves room for the x <= 0 column
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }

  Canvas c(title);
  c.y_axis(y_label, y_min, y_max);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto to_x = [&](double x) {
    const double v = log_x ? (x > 0.0 ? std::log10(x) : lo) : x;
    return kLeft + plot_w * (v - lo) / (hi - lo);
  };
  const auto to_y = [&](double y) {
    return kHeight - kBottom - plot_h * std::clamp((y - y_min) / (y_max - y_min), 0.0, 1.0);
  };

  c.line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, "black");
  for (int k = 0; k <= 5; ++k) {
    const double v = lo + (hi - lo) * k / 5.0;
    const double x = kLeft + plot_w * k / 5.0;
    c.line(x, kHeight - kBottom, x, kHeight - kBottom + 4.0, "black");
    c.text(x, kHeight - kBottom + 18.0, log_x ? fmt(std::pow(10.0, v)) : fmt(v), "middle");
  }
  c.text(kLeft + plot_w / 2.0, kHeight - 14.0, x_label + (log_x ? " (log scale)" : ""), "middle");

  for (std::size_t s = 0; s < series.size(); ++s) {
    const LineSeries& ls = series[s];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < ls.x.size(); ++i) pts.emplace_back(to_x(ls.x[i]), to_y(ls.y[i]));
    c.polyline(pts, color(s));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      c.circle(pts[i].first, pts[i].second, 4.0, color(s));
      if (!ls.errors.empty()) {
        c.line(pts[i].first, to_y(ls.y[i] - ls.errors[i]), pts[i].first,
               to_y(ls.y[i] + ls.errors[i]), color(s));
      }
    }
  }
  std::vector<std::string> names;
  for (const LineSeries& s : series) names.push_back(s.name);
  c.legend(names);
  return c.str();
}

}  // namespace mvp
