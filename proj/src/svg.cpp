#include "wsac/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "wsac/types.hpp"

namespace wsac::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 160.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& raw) {
  std::string out;
  for (char ch : raw) {
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

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double map(double v) const { return log ? std::log10(v) : v; }
  double unit(double v) const { return (map(v) - lo) / (hi - lo); }
};

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }

Axis fit_axis(const std::vector<Series>& series, bool use_x, bool log) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    const auto& vals = use_x ? s.x : s.y;
    for (double v : vals) {
      if (!usable(v, log)) continue;
      const double m = log ? std::log10(v) : v;
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
  }
  if (!std::isfinite(lo)) return Axis{0.0, 1.0, log};
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  } else if (!log) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return Axis{lo, hi, log};
}

std::string tick_label(double mapped, bool log) {
  std::ostringstream os;
  os.precision(3);
  os << (log ? std::pow(10.0, mapped) : mapped);
  return os.str();
}

}  // namespace

std::string line_chart(const std::vector<Series>& series, const ChartOptions& opts) {
  const Axis ax = fit_axis(series, true, opts.log_x);
  const Axis ay = fit_axis(series, false, opts.log_y);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + ax.unit(v) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - ay.unit(v)) * ph; };

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(opts.title)
     << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double fx = ax.lo + (ax.hi - ax.lo) * i / kTicks;
    const double fy = ay.lo + (ay.hi - ay.lo) * i / kTicks;
    const double x = kLeft + pw * i / kTicks;
    const double y = kTop + ph - ph * i / kTicks;
    os << "<line x1=\"" << x << "\" y1=\"" << kTop + ph << "\" x2=\"" << x << "\" y2=\"" << kTop + ph + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << x << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
       << tick_label(fx, ax.log) << "</text>\n";
    os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\"" << y
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << tick_label(fy, ay.log)
       << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">"
     << escape(opts.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << kTop + ph / 2 << ")\">" << escape(opts.y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    if (s.x.size() != s.y.size()) throw ConfigError("svg: series '" + s.name + "' has mismatched x/y");
    const char* color = kPalette[i % std::size(kPalette)];
    std::ostringstream pts;
    pts.precision(6);
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      if (!usable(s.x[j], opts.log_x) || !usable(s.y[j], opts.log_y)) continue;
      pts << px(s.x[j]) << ',' << py(s.y[j]) << ' ';
      os << "<circle cx=\"" << px(s.x[j]) << "\" cy=\"" << py(s.y[j]) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    os << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(i);
    os << "<line x1=\"" << kLeft + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << kLeft + pw + 32 << "\" y2=\""
       << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kLeft + pw + 38 << "\" y=\"" << ly << "\">" << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_line_chart(const std::filesystem::path& path, const std::vector<Series>& series,
                      const ChartOptions& opts) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("svg: cannot open " + path.string());
  out << line_chart(series, opts);
  if (!out) throw std::runtime_error("svg: write failed for " + path.string());
}

}  // namespace wsac::svg
