#pragma once

#include <string>
#include <utility>
#include <vector>

namespace tailbench {

// Minimal self-contained SVG emitter for the CCDF / QQ diagnostic plots.
// Paths are written directly; no plotting toolkit involved.
struct SvgSeries {
    std::vector<std::pair<double, double>> points;
    std::string label;
    std::string color = "#1f77b4";
    bool line = true;  // false draws markers
};

struct SvgPlot {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool log_x = false;
    bool log_y = false;
    std::vector<SvgSeries> series;

    std::string render() const;
    void write(const std::string& path) const;
};

}  // namespace tailbench
