#pragma once

#include <string>
#include <vector>

namespace fgmhd {

struct PlotSeries {
    std::string label;
    std::string color;  // CSS color, e.g. "#1f77b4"
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal line-plot SVG: fixed 800x500 viewBox, axis ticks snapped to
/// 1/2/5 decades, one polyline per series. No plotting dependency, so the
/// bytes are fully reproducible.
std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<PlotSeries>& series);

}  // namespace fgmhd
