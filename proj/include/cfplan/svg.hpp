#pragma once

#include <span>
#include <string>
#include <vector>

namespace cfplan::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Static line chart; a single-point series renders as a dot.
std::string line_plot(std::span<const Series> series, const std::string& title, const std::string& x_label,
                      const std::string& y_label);

std::string bar_chart(std::span<const std::string> labels, std::span<const double> values, const std::string& title);

// Equal-width bins over [lo, hi]; values outside are clamped into the end bins.
std::string histogram(std::span<const double> values, double lo, double hi, int bins, const std::string& title);

}  // namespace cfplan::svg
