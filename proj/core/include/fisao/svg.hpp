#pragma once

#include <optional>
#include <span>
#include <string>

#include "fisao/analysis.hpp"

namespace fisao::svg {

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 400;
};

/// Overlaid step histograms, one colour per series, with a legend.
std::string histogram_svg(const Histogram& h, const PlotOptions& opts);

/// Scatter plot; draws the fitted line when given.
std::string scatter_svg(std::span<const double> xs, std::span<const double> ys, const std::optional<LinearFit>& fit,
                        const PlotOptions& opts);

}  // namespace fisao::svg
