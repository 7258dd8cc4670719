#pragma once

#include <string>
#include <vector>

namespace ghem {

// Minimal standalone SVG line charts. Each emitted file embeds its data as a
// CSV table inside an XML comment so plots stay reviewable in diffs.
struct SvgSeries {
    std::string label;
    std::string color;  // CSS color
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

struct SvgChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<SvgSeries> series;
    int width = 960;
    int height = 420;
};

void write_svg_chart(const SvgChart& chart, const std::string& path);

}  // namespace ghem
