#include "ghem/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "ghem/csv.hpp"

namespace ghem {

namespace {

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

// A readable tick step: 1/2/5 times a power of ten.
double nice_step(double span, int target_ticks) {
    if (span <= 0) return 1.0;
    const double raw = span / std::max(1, target_ticks);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) return m * mag;
    return 10.0 * mag;
}

}  // namespace

void write_svg_chart(const SvgChart& chart, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write SVG '" + path + "'");

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : chart.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmin < xmax)) {
        xmin = 0;
        xmax = 1;
    }
    if (!(ymin < ymax)) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const int ml = 64, mr = 16, mt = 36, mb = 46;
    const double pw = chart.width - ml - mr;
    const double ph = chart.height - mt - mb;
    const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    const auto py = [&](double y) { return mt + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width
        << "\" height=\"" << chart.height << "\" font-family=\"sans-serif\">\n";

    out << "<!-- data:\nseries,x,y\n";
    for (const auto& s : chart.series)
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << esc(s.label) << "," << fmt_double(s.x[i], 4) << "," << fmt_double(s.y[i], 6)
                << "\n";
    out << "-->\n";

    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << chart.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-size=\"14\">" << esc(chart.title) << "</text>\n";

    // Axes and grid.
    const double xstep = nice_step(xmax - xmin, 8);
    const double ystep = nice_step(ymax - ymin, 6);
    out << "<g stroke=\"#ddd\" stroke-width=\"1\" font-size=\"10\" fill=\"#444\">\n";
    for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-9; x += xstep) {
        out << "<line x1=\"" << px(x) << "\" y1=\"" << mt << "\" x2=\"" << px(x) << "\" y2=\""
            << mt + ph << "\"/>\n";
        out << "<text x=\"" << px(x) << "\" y=\"" << mt + ph + 14
            << "\" text-anchor=\"middle\" stroke=\"none\">" << fmt_double(x, xstep < 1 ? 2 : 0)
            << "</text>\n";
    }
    for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax + 1e-9; y += ystep) {
        out << "<line x1=\"" << ml << "\" y1=\"" << py(y) << "\" x2=\"" << ml + pw << "\" y2=\""
            << py(y) << "\"/>\n";
        out << "<text x=\"" << ml - 6 << "\" y=\"" << py(y) + 3
            << "\" text-anchor=\"end\" stroke=\"none\">" << fmt_double(y, ystep < 1 ? 3 : 0)
            << "</text>\n";
    }
    out << "</g>\n";
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << chart.height - 8
        << "\" text-anchor=\"middle\" font-size=\"12\">" << esc(chart.x_label) << "</text>\n";
    out << "<text x=\"14\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
        << mt + ph / 2 << ")\">" << esc(chart.y_label) << "</text>\n";

    for (const auto& s : chart.series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\"";
        if (s.dashed) out << " stroke-dasharray=\"6 4\"";
        out << " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << fmt_double(px(s.x[i]), 1) << "," << fmt_double(py(s.y[i]), 1) << " ";
        out << "\"/>\n";
    }

    // Legend.
    double ly = mt + 14;
    for (const auto& s : chart.series) {
        out << "<line x1=\"" << ml + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << ml + 34
            << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
        if (s.dashed) out << " stroke-dasharray=\"6 4\"";
        out << "/>\n<text x=\"" << ml + 40 << "\" y=\"" << ly
            << "\" font-size=\"11\">" << esc(s.label) << "</text>\n";
        ly += 16;
    }
    out << "</svg>\n";
}

}  // namespace ghem
