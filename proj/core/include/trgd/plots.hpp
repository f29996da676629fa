#pragma once

#include <string>
#include <vector>

namespace trgd {

// Minimal SVG line charts mirroring the experiment figures. The CSV files
// remain the artifact of record; these are a reading convenience.
struct PlotSeries {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
};

std::string render_line_chart_svg(const PlotSpec& spec, int width = 640, int height = 420);

}  // namespace trgd
