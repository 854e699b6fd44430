#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "tagnav/geometry.hpp"

namespace tagnav {

/// One polyline in a chart.
struct SvgSeries {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<Vec2> points;
};

/**
 * Minimal self-contained SVG line chart: axes box, ticks, polylines and a
 * legend. Used for Bode curves, spectra and trajectory overlays.
 */
inline std::string render_line_chart(const std::string& title,
                                     const std::string& xlabel,
                                     const std::string& ylabel,
                                     const std::vector<SvgSeries>& series,
                                     bool log_x = false, int width = 800,
                                     int height = 500) {
    const double ml = 70, mr = 25, mt = 45, mb = 55;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (const auto& p : s.points) {
            const double x = log_x ? std::log10(p.x()) : p.x();
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, p.y());
            ymax = std::max(ymax, p.y());
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
    if (ymax - ymin < 1e-12) ymax = ymin + 1.0;

    const auto px = [&](double x) {
        const double v = log_x ? std::log10(x) : x;
        return ml + (v - xmin) / (xmax - xmin) * pw;
    };
    const auto py = [&](double y) { return mt + (ymax - y) / (ymax - ymin) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-size=\"16\">" << title << "</text>\n";
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
        << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 5.0;
        const double gx = ml + pw * i / 5.0;
        const double vx = log_x ? std::pow(10.0, fx) : fx;
        out << "<line x1=\"" << gx << "\" y1=\"" << mt + ph << "\" x2=\"" << gx
            << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", vx);
        out << "<text x=\"" << gx << "\" y=\"" << mt + ph + 20
            << "\" text-anchor=\"middle\" font-size=\"11\">" << buf << "</text>\n";
        const double fy = ymin + (ymax - ymin) * i / 5.0;
        const double gy = py(fy);
        out << "<line x1=\"" << ml - 5 << "\" y1=\"" << gy << "\" x2=\"" << ml
            << "\" y2=\"" << gy << "\" stroke=\"black\"/>\n";
        std::snprintf(buf, sizeof buf, "%.3g", fy);
        out << "<text x=\"" << ml - 8 << "\" y=\"" << gy + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << buf << "</text>\n";
    }
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel << "</text>\n";
    out << "<text x=\"18\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
        << mt + ph / 2 << ")\">" << ylabel << "</text>\n";

    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& p : s.points) out << px(p.x()) << "," << py(p.y()) << " ";
        out << "\"/>\n";
    }
    double ly = mt + 14;
    for (const auto& s : series) {
        out << "<line x1=\"" << ml + pw - 140 << "\" y1=\"" << ly << "\" x2=\""
            << ml + pw - 115 << "\" y2=\"" << ly << "\" stroke=\"" << s.color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << ml + pw - 108 << "\" y=\"" << ly + 4
            << "\" font-size=\"12\">" << s.label << "</text>\n";
        ly += 18;
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace tagnav
