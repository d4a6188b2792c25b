#include "dmpcut/svg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace dmpcut::svg {

namespace {

constexpr double kWidth = 480, kHeight = 360, kMargin = 56;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '&': out += "&amp;"; break;
    default: out += c;
    }
  }
  return out;
}

void header(std::ostream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << escape(title)
      << "</text>\n";
}

} // namespace

void line_plot(std::ostream& out, const std::string& title, const std::string& x_label,
               const std::string& y_label, const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (s.x[i] > 0 && s.y[i] > 0) {
        x0 = std::min(x0, std::log10(s.x[i]));
        x1 = std::max(x1, std::log10(s.x[i]));
        y0 = std::min(y0, std::log10(s.y[i]));
        y1 = std::max(y1, std::log10(s.y[i]));
      }
  if (!(x0 <= x1)) {
    x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  }
  x0 = std::floor(x0), x1 = std::max(std::ceil(x1), x0 + 1);
  y0 = std::floor(y0), y1 = std::max(std::ceil(y1), y0 + 1);
  const double pw = kWidth - 2 * kMargin, ph = kHeight - 2 * kMargin;
  auto px = [&](double v) { return kMargin + pw * (std::log10(v) - x0) / (x1 - x0); };
  auto py = [&](double v) { return kHeight - kMargin - ph * (std::log10(v) - y0) / (y1 - y0); };

  const auto precision = out.precision(6);
  header(out, title);
  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double e = x0; e <= x1; e += 1)
    out << "<text x=\"" << kMargin + pw * (e - x0) / (x1 - x0) << "\" y=\"" << kHeight - kMargin + 14
        << "\" text-anchor=\"middle\">1e" << e << "</text>\n";
  for (double e = y0; e <= y1; e += 1)
    out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kHeight - kMargin - ph * (e - y0) / (y1 - y0) + 4
        << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 14 << "\" text-anchor=\"middle\">" << escape(x_label)
      << "</text>\n"
      << "<text x=\"14\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << kHeight / 2 << ")\">" << escape(y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kColors[k % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (s.x[i] > 0 && s.y[i] > 0)
        out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    out << "\"/>\n";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (s.x[i] > 0 && s.y[i] > 0)
        out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << color
            << "\"/>\n";
    out << "<text x=\"" << kMargin + 8 << "\" y=\"" << kMargin + 16 + 14 * static_cast<double>(k) << "\" fill=\""
        << color << "\">" << escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
  out.precision(precision);
}

void heatmap(std::ostream& out, const std::string& title, const Eigen::MatrixXd& values) {
  double vmax = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (std::isfinite(values.data()[i]))
      vmax = std::max(vmax, values.data()[i]);
  const double side = std::min(kWidth, kHeight) - 2 * kMargin;
  const double left = (kWidth - side) / 2;
  const double cw = side / static_cast<double>(std::max<Eigen::Index>(values.cols(), 1));
  const double ch = side / static_cast<double>(std::max<Eigen::Index>(values.rows(), 1));

  const auto precision = out.precision(6);
  header(out, title);
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double v = values(r, c);
      std::string fill = "#bbbbbb";
      if (std::isfinite(v)) {
        const double t = vmax > 0 ? std::clamp(v / vmax, 0.0, 1.0) : 0.0;
        const int g = static_cast<int>(std::lround(255 * (1 - t)));
        const int red = static_cast<int>(std::lround(255 - 115 * t));
        std::ostringstream hex;
        hex << '#' << std::hex << std::setfill('0') << std::setw(2) << red << std::setw(2) << g << std::setw(2) << g;
        fill = hex.str();
      }
      out << "<rect x=\"" << left + cw * static_cast<double>(c) << "\" y=\""
          << kMargin + side - ch * static_cast<double>(r + 1) << "\" width=\"" << cw + 0.05 << "\" height=\""
          << ch + 0.05 << "\" fill=\"" << fill << "\"/>\n";
    }
  out << "<rect x=\"" << left << "\" y=\"" << kMargin << "\" width=\"" << side << "\" height=\"" << side
      << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 20 << "\" text-anchor=\"middle\">max " << vmax
      << "</text>\n</svg>\n";
  out.precision(precision);
}

} // namespace dmpcut::svg
