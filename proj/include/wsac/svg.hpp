#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace wsac::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Minimal line chart with markers, axis ticks and a legend.
/// Non-finite points (and non-positive ones on log axes) are skipped.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& opts);
void write_line_chart(const std::filesystem::path& path, const std::vector<Series>& series,
                      const ChartOptions& opts);

}  // namespace wsac::svg
