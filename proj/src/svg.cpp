#include "tailbench/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "tailbench/common.hpp"

namespace tailbench {

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    bool log = false;

    double to_unit(double v) const {
        const double a = log ? std::log10(v) : v;
        const double l = log ? std::log10(lo) : lo;
        const double h = log ? std::log10(hi) : hi;
        return (a - l) / (h - l);
    }
    std::vector<double> ticks() const {
        std::vector<double> t;
        if (log) {
            const int e0 = static_cast<int>(std::floor(std::log10(lo)));
            const int e1 = static_cast<int>(std::ceil(std::log10(hi)));
            for (int e = e0; e <= e1; ++e) {
                const double v = std::pow(10.0, e);
                if (v >= lo * 0.999 && v <= hi * 1.001) t.push_back(v);
            }
        } else {
            const double span = hi - lo;
            const double raw = span / 5.0;
            const double mag = std::pow(10.0, std::floor(std::log10(raw)));
            double step = mag;
            if (raw / mag >= 5.0)
                step = 5.0 * mag;
            else if (raw / mag >= 2.0)
                step = 2.0 * mag;
            for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step)
                t.push_back(v);
        }
        return t;
    }
};

}  // namespace

std::string SvgPlot::render() const {
    // collect plottable points (log axes drop non-positive values)
    Axis ax{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(), log_x};
    Axis ay{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(), log_y};
    long n_points = 0;
    for (const auto& s : series) {
        for (auto [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (log_x && x <= 0) continue;
            if (log_y && y <= 0) continue;
            ax.lo = std::min(ax.lo, x);
            ax.hi = std::max(ax.hi, x);
            ay.lo = std::min(ay.lo, y);
            ay.hi = std::max(ay.hi, y);
            ++n_points;
        }
    }
    if (n_points == 0) {
        ax = {0.0, 1.0, false};
        ay = {0.0, 1.0, false};
    }
    if (ax.lo == ax.hi) {
        ax.lo -= 0.5;
        ax.hi += 0.5;
    }
    if (ay.lo == ay.hi) {
        ay.lo -= 0.5;
        ay.hi += 0.5;
    }

    auto px = [&](double x) { return kLeft + ax.to_unit(x) * (kWidth - kLeft - kRight); };
    auto py = [&](double y) { return kHeight - kBottom - ay.to_unit(y) * (kHeight - kTop - kBottom); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    o << "<!-- points: " << n_points << " -->\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << title << "</text>\n";

    // frame
    o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << (kWidth - kLeft - kRight)
      << "\" height=\"" << (kHeight - kTop - kBottom)
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

    for (double t : ax.ticks()) {
        const double x = px(t);
        o << "<line x1=\"" << fmt(x) << "\" y1=\"" << (kHeight - kBottom) << "\" x2=\"" << fmt(x)
          << "\" y2=\"" << (kHeight - kBottom + 5) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << fmt(x) << "\" y=\"" << (kHeight - kBottom + 18)
          << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt(t) << "</text>\n";
    }
    for (double t : ay.ticks()) {
        const double y = py(t);
        o << "<line x1=\"" << (kLeft - 5) << "\" y1=\"" << fmt(y) << "\" x2=\"" << kLeft
          << "\" y2=\"" << fmt(y) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << (kLeft - 8) << "\" y=\"" << fmt(y + 3)
          << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(t) << "</text>\n";
    }
    o << "<text x=\"" << kWidth / 2 << "\" y=\"" << (kHeight - 12)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
    o << "<text x=\"16\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << kHeight / 2 << ")\">" << ylabel << "</text>\n";

    double legend_y = kTop + 14;
    for (const auto& s : series) {
        if (s.line) {
            o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (auto [x, y] : s.points) {
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                if (log_x && x <= 0) continue;
                if (log_y && y <= 0) continue;
                o << fmt(px(x)) << "," << fmt(py(y)) << " ";
            }
            o << "\"/>\n";
        } else {
            for (auto [x, y] : s.points) {
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                if (log_x && x <= 0) continue;
                if (log_y && y <= 0) continue;
                o << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y))
                  << "\" r=\"2\" fill=\"" << s.color << "\"/>\n";
            }
        }
        if (!s.label.empty()) {
            o << "<rect x=\"" << (kWidth - kRight - 150) << "\" y=\"" << (legend_y - 8)
              << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>\n";
            o << "<text x=\"" << (kWidth - kRight - 136) << "\" y=\"" << legend_y
              << "\" font-size=\"11\">" << s.label << "</text>\n";
            legend_y += 16;
        }
    }
    o << "</svg>\n";
    return o.str();
}

void SvgPlot::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("SvgPlot: cannot write " + path);
    out << render();
}

}  // namespace tailbench
