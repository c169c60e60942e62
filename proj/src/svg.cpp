#include "cfplan/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace cfplan::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Range {
  double lo;
  double hi;
};

Range padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = std::abs(lo) > 0.0 ? 0.5 * std::abs(lo) : 0.5;
    return {lo - pad, hi + pad};
  }
  return {lo, hi};
}

class Canvas {
 public:
  Canvas(const std::string& title, Range x, Range y) : x_(x), y_(y) {
    body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
             "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
    body_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    body_ += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"16\">" + escape(title) + "</text>\n";
  }

  double px(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom); }

  void axes(const std::string& x_label, const std::string& y_label, bool x_ticks) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    body_ += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) +
             "\" stroke=\"black\"/>\n";
    body_ += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) +
             "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double fy = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      body_ += label(x0 - 6, py(fy) + 4, tick(fy), "end");
      if (x_ticks) {
        const double fx = x_.lo + (x_.hi - x_.lo) * i / 4.0;
        body_ += label(px(fx), y0 + 18, tick(fx), "middle");
      }
    }
    body_ += label((x0 + x1) / 2, kHeight - 16, x_label, "middle");
    body_ += "<text x=\"18\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"12\" transform=\"rotate(-90 18 " + num((y0 + y1) / 2) + ")\">" + escape(y_label) +
             "</text>\n";
  }

  void raw(const std::string& s) { body_ += s; }

  static std::string label(double x, double y, const std::string& text, const char* anchor) {
    return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(text) + "</text>\n";
  }

  std::string finish() { return body_ + "</svg>\n"; }

 private:
  Range x_;
  Range y_;
  std::string body_;
};

}  // namespace

std::string line_plot(std::span<const Series> series, const std::string& title, const std::string& x_label,
                      const std::string& y_label) {
  double xlo = 0.0, xhi = 1.0, ylo = 0.0, yhi = 1.0;
  bool any = false;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size()) {
      throw std::invalid_argument("series x and y differ in length");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        continue;
      }
      if (!any) {
        xlo = xhi = s.x[i];
        ylo = yhi = s.y[i];
        any = true;
      }
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  Canvas c(title, padded(xlo, xhi), padded(ylo, yhi));
  c.axes(x_label, y_label, true);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        pts += num(c.px(s.x[i])) + "," + num(c.py(s.y[i])) + " ";
      }
    }
    if (s.x.size() == 1) {
      c.raw("<circle cx=\"" + num(c.px(s.x[0])) + "\" cy=\"" + num(c.py(s.y[0])) + "\" r=\"3\" fill=\"" + color +
            "\"/>\n");
    } else if (!pts.empty()) {
      pts.pop_back();
      c.raw("<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
            "\"/>\n");
    }
    c.raw("<text x=\"" + num(kWidth - kRight - 4) + "\" y=\"" + num(kTop + 14.0 * static_cast<double>(k + 1)) +
          "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" + color + "\">" +
          escape(s.name) + "</text>\n");
  }
  return c.finish();
}

std::string bar_chart(std::span<const std::string> labels, std::span<const double> values, const std::string& title) {
  if (labels.size() != values.size()) {
    throw std::invalid_argument("bar labels and values differ in length");
  }
  double hi = 1.0;
  for (double v : values) {
    if (std::isfinite(v)) {
      hi = std::max(hi, v);
    }
  }
  const double n = std::max<double>(1.0, static_cast<double>(values.size()));
  Canvas c(title, {0.0, n}, {0.0, hi});
  c.axes("", "", false);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::isfinite(values[i]) ? std::max(0.0, values[i]) : 0.0;
    const double x0 = c.px(static_cast<double>(i) + 0.15), x1 = c.px(static_cast<double>(i) + 0.85);
    const double top = c.py(v), base = c.py(0.0);
    c.raw("<rect x=\"" + num(x0) + "\" y=\"" + num(top) + "\" width=\"" + num(x1 - x0) + "\" height=\"" +
          num(base - top) + "\" fill=\"" + kPalette[0] + "\"/>\n");
    c.raw(Canvas::label((x0 + x1) / 2, base + 16, labels[i], "middle"));
    c.raw(Canvas::label((x0 + x1) / 2, top - 4, tick(values[i]), "middle"));
  }
  return c.finish();
}

std::string histogram(std::span<const double> values, double lo, double hi, int bins, const std::string& title) {
  if (bins <= 0 || !(hi > lo)) {
    throw std::invalid_argument("histogram needs bins > 0 and hi > lo");
  }
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : values) {
    if (!std::isfinite(v)) {
      continue;
    }
    int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
    b = std::clamp(b, 0, bins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  std::vector<std::string> labels;
  for (int b = 0; b < bins; ++b) {
    labels.push_back(tick(lo + (hi - lo) * b / bins));
  }
  return bar_chart(labels, counts, title);
}

}  // namespace cfplan::svg
