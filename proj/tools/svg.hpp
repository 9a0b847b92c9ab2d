// Minimal standalone SVG charts for the report command.
#pragma once

#include <string>
#include <vector>

namespace degkit::svg {

struct Series {
  std::string name;
  std::vector<double> values;  // one per category
};

/// Grouped vertical bars, one group per category.
std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<Series>& series, const std::string& y_label);

std::string scatter(const std::string& title, const std::vector<double>& x, const std::vector<double>& y,
                    const std::string& x_label, const std::string& y_label);

std::string escape(const std::string& text);

}  // namespace degkit::svg
