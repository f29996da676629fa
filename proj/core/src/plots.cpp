#include "trgd/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace trgd {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::string render_line_chart_svg(const PlotSpec& spec, int width, int height) {
    const double ml = 62, mr = 150, mt = 34, mb = 46;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const PlotSeries& s : spec.series) {
        for (size_t i = 0; i < s.xs.size(); ++i) {
            if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
            if (first) {
                xmin = xmax = s.xs[i];
                ymin = ymax = s.ys[i];
                first = false;
            } else {
                xmin = std::min(xmin, s.xs[i]);
                xmax = std::max(xmax, s.xs[i]);
                ymin = std::min(ymin, s.ys[i]);
                ymax = std::max(ymax, s.ys[i]);
            }
        }
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height << "'>\n";
    svg << "<rect width='100%' height='100%' fill='white'/>\n";
    svg << "<text x='" << width / 2 << "' y='20' text-anchor='middle' font-size='14'>" << spec.title << "</text>\n";
    svg << "<line x1='" << ml << "' y1='" << mt + ph << "' x2='" << ml + pw << "' y2='" << mt + ph
        << "' stroke='black'/>\n";
    svg << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << mt + ph << "' stroke='black'/>\n";

    for (int i = 0; i <= 4; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 4.0;
        const double yv = ymin + (ymax - ymin) * i / 4.0;
        svg << "<text x='" << sx(xv) << "' y='" << mt + ph + 18 << "' text-anchor='middle' font-size='11'>" << num(xv)
            << "</text>\n";
        svg << "<text x='" << ml - 6 << "' y='" << sy(yv) + 4 << "' text-anchor='end' font-size='11'>" << num(yv)
            << "</text>\n";
        svg << "<line x1='" << ml << "' y1='" << sy(yv) << "' x2='" << ml + pw << "' y2='" << sy(yv)
            << "' stroke='#dddddd'/>\n";
    }
    svg << "<text x='" << ml + pw / 2 << "' y='" << height - 8 << "' text-anchor='middle' font-size='12'>"
        << spec.x_label << "</text>\n";
    svg << "<text x='16' y='" << mt + ph / 2 << "' text-anchor='middle' font-size='12' transform='rotate(-90 16 "
        << mt + ph / 2 << ")'>" << spec.y_label << "</text>\n";

    for (size_t si = 0; si < spec.series.size(); ++si) {
        const PlotSeries& s = spec.series[si];
        const char* color = kPalette[si % 8];
        svg << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
        for (size_t i = 0; i < s.xs.size(); ++i) {
            if (!std::isfinite(s.ys[i])) continue;
            svg << sx(s.xs[i]) << ',' << sy(s.ys[i]) << ' ';
        }
        svg << "'/>\n";
        for (size_t i = 0; i < s.xs.size(); ++i) {
            if (!std::isfinite(s.ys[i])) continue;
            svg << "<circle cx='" << sx(s.xs[i]) << "' cy='" << sy(s.ys[i]) << "' r='2.5' fill='" << color << "'/>\n";
        }
        const double ly = mt + 14 + 16 * static_cast<double>(si);
        svg << "<line x1='" << ml + pw + 10 << "' y1='" << ly << "' x2='" << ml + pw + 30 << "' y2='" << ly
            << "' stroke='" << color << "' stroke-width='2'/>\n";
        svg << "<text x='" << ml + pw + 34 << "' y='" << ly + 4 << "' font-size='11'>" << s.label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace trgd
