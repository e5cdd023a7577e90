#include "fisao/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fisao/error.hpp"

namespace fisao::svg {
namespace {

constexpr std::array<const char*, 6> kColours{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
constexpr double kMargin = 50.0;

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
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;
  double w, h;

  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (w - 2 * kMargin); }
  double py(double y) const { return h - kMargin - (y - y0) / (y1 - y0) * (h - 2 * kMargin); }
};

void open_doc(std::ostringstream& os, const Frame& f, const PlotOptions& opts) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width << "\" height=\"" << opts.height
     << "\" viewBox=\"0 0 " << opts.width << ' ' << opts.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opts.title.empty()) {
    os << "<text x=\"" << f.w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(opts.title)
       << "</text>\n";
  }
  const double left = kMargin, right = f.w - kMargin, top = kMargin, bottom = f.h - kMargin;
  os << "<g stroke=\"black\" fill=\"none\"><line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right
     << "\" y2=\"" << bottom << "\"/><line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
     << bottom << "\"/></g>\n";
  os << "<g font-size=\"10\">";
  os << "<text x=\"" << left << "\" y=\"" << bottom + 14 << "\" text-anchor=\"middle\">" << num(f.x0) << "</text>";
  os << "<text x=\"" << right << "\" y=\"" << bottom + 14 << "\" text-anchor=\"middle\">" << num(f.x1) << "</text>";
  os << "<text x=\"" << left - 4 << "\" y=\"" << bottom << "\" text-anchor=\"end\">" << num(f.y0) << "</text>";
  os << "<text x=\"" << left - 4 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << num(f.y1) << "</text>";
  os << "</g>\n";
  if (!opts.x_label.empty()) {
    os << "<text x=\"" << f.w / 2 << "\" y=\"" << f.h - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << escape(opts.x_label) << "</text>\n";
  }
  if (!opts.y_label.empty()) {
    os << "<text transform=\"translate(14," << f.h / 2 << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">"
       << escape(opts.y_label) << "</text>\n";
  }
}

}  // namespace

std::string histogram_svg(const Histogram& h, const PlotOptions& opts) {
  if (h.bins() == 0) throw InputError("histogram_svg: empty histogram");
  std::size_t peak = 1;
  for (const auto& c : h.counts) peak = std::max(peak, *std::max_element(c.begin(), c.end()));
  const Frame f{h.bin_edges.front(), h.bin_edges.back(), 0.0, static_cast<double>(peak),
                static_cast<double>(opts.width), static_cast<double>(opts.height)};
  std::ostringstream os;
  open_doc(os, f, opts);
  for (std::size_t s = 0; s < h.counts.size(); ++s) {
    const char* colour = kColours[s % kColours.size()];
    os << "<path fill=\"" << colour << "\" fill-opacity=\"0.25\" stroke=\"" << colour << "\" d=\"M" << f.px(f.x0) << ','
       << f.py(0);
    for (std::size_t b = 0; b < h.bins(); ++b) {
      const double y = f.py(static_cast<double>(h.counts[s][b]));
      os << " L" << f.px(h.bin_edges[b]) << ',' << y << " L" << f.px(h.bin_edges[b + 1]) << ',' << y;
    }
    os << " L" << f.px(f.x1) << ',' << f.py(0) << " Z\"/>\n";
    os << "<text x=\"" << f.w - kMargin - 4 << "\" y=\"" << kMargin + 14.0 * static_cast<double>(s + 1)
       << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << colour << "\">" << escape(h.series[s])
       << " (n=" << h.summaries[s].count << ", mean=" << num(h.summaries[s].mean) << ")</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string scatter_svg(std::span<const double> xs, std::span<const double> ys, const std::optional<LinearFit>& fit,
                        const PlotOptions& opts) {
  if (xs.size() != ys.size() || xs.empty()) throw InputError("scatter_svg: need equal-length non-empty series");
  auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
  auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
  Frame f{*xmin, *xmax, *ymin, *ymax, static_cast<double>(opts.width), static_cast<double>(opts.height)};
  if (f.x0 == f.x1) { f.x0 -= 0.5; f.x1 += 0.5; }
  if (f.y0 == f.y1) { f.y0 -= 0.5; f.y1 += 0.5; }
  std::ostringstream os;
  open_doc(os, f, opts);
  os << "<g fill=\"" << kColours[0] << "\" fill-opacity=\"0.6\">";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    os << "<circle cx=\"" << f.px(xs[i]) << "\" cy=\"" << f.py(ys[i]) << "\" r=\"2.5\"/>";
  }
  os << "</g>\n";
  if (fit) {
    const double ya = fit->slope * f.x0 + fit->intercept;
    const double yb = fit->slope * f.x1 + fit->intercept;
    os << "<line x1=\"" << f.px(f.x0) << "\" y1=\"" << f.py(ya) << "\" x2=\"" << f.px(f.x1) << "\" y2=\"" << f.py(yb)
       << "\" stroke=\"" << kColours[1] << "\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << f.w - kMargin - 4 << "\" y=\"" << kMargin + 14
       << "\" text-anchor=\"end\" font-size=\"11\">y = " << num(fit->slope) << " x + " << num(fit->intercept)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace fisao::svg
