#pragma once

// Self-contained SVG emitters: an overhead scene view (map in grays, ground
// truth in blue, predicted modes in red) and a generic 2D plot used for loss
// curves and the log-log scaling figures. Emitters are pure functions that
// return the document as a string; coordinates are printed with fixed
// precision so identical inputs produce byte-identical files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "dgk/inference.hpp"
#include "dgk/scene.hpp"

namespace dgk {

namespace detail {

inline std::string fmt3(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline std::string fmt_label(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

struct Bounds {
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();

    void add(const Vec2& p) {
        min_x = std::min(min_x, p.x);
        min_y = std::min(min_y, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }
    bool valid() const { return min_x <= max_x && min_y <= max_y; }
};

inline const char* semantic_color(Semantic s) {
    switch (s) {
    case Semantic::lane_center: return "#c4c7cc";
    case Semantic::lane_boundary: return "#9aa0a6";
    case Semantic::road_edge: return "#5f6368";
    case Semantic::crosswalk: return "#d2d5da";
    }
    return "#9aa0a6";
}

}  // namespace detail

/// Overhead view of one scene with optional predictions, in world
/// coordinates (meters). Map polylines render in grays, the drivable area
/// as a light fill, ground truth in blue, predicted modes in red with
/// opacity following each mode's probability. The y axis is flipped so +y
/// points up, as on paper.
inline std::string svg_scene(const Scene& scene, const TrajectorySet* prediction = nullptr) {
    detail::Bounds b;
    for (const auto& poly : scene.drivable) {
        for (const auto& p : poly) {
            b.add(p);
        }
    }
    for (const auto& pl : scene.map) {
        for (const auto& p : pl.points) {
            b.add(p);
        }
    }
    for (const auto& s : scene.target_history) {
        if (s.valid) {
            b.add(s.position);
        }
    }
    for (const auto& p : scene.future_gt) {
        b.add(p);
    }
    if (prediction != nullptr) {
        for (const auto& mode : prediction->modes) {
            for (const auto& p : mode) {
                b.add(p);
            }
        }
    }
    if (!b.valid()) {
        throw Error{"svg_scene: nothing to draw"};
    }
    const double margin = 5.0;
    const double w = b.max_x - b.min_x + 2.0 * margin;
    const double h = b.max_y - b.min_y + 2.0 * margin;
    const auto px = [&](double x) { return detail::fmt3(x - b.min_x + margin); };
    const auto py = [&](double y) { return detail::fmt3(b.max_y + margin - y); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt3(8.0 * w) +
           "\" height=\"" + detail::fmt3(8.0 * h) + "\" viewBox=\"0 0 " + detail::fmt3(w) + " " +
           detail::fmt3(h) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

    for (const auto& poly : scene.drivable) {
        svg += "<polygon fill=\"#eceef1\" stroke=\"none\" points=\"";
        for (const auto& p : poly) {
            svg += px(p.x) + "," + py(p.y) + " ";
        }
        svg += "\"/>\n";
    }
    for (const auto& pl : scene.map) {
        svg += std::string{"<polyline fill=\"none\" stroke=\""} +
               detail::semantic_color(pl.semantic) + "\" stroke-width=\"0.25\"";
        if (pl.semantic == Semantic::lane_center) {
            svg += " stroke-dasharray=\"1.5,1.5\"";
        }
        svg += " points=\"";
        for (const auto& p : pl.points) {
            svg += px(p.x) + "," + py(p.y) + " ";
        }
        svg += "\"/>\n";
    }
    for (const auto& track : scene.nearby) {
        if (track.states.empty() || !track.states.back().valid) {
            continue;
        }
        const auto& p = track.states.back().position;
        svg += "<circle cx=\"" + px(p.x) + "\" cy=\"" + py(p.y) +
               "\" r=\"0.6\" fill=\"#80868b\"/>\n";
    }

    const auto polyline = [&](const std::vector<Vec2>& pts, const std::string& style) {
        if (pts.empty()) {
            return;
        }
        svg += "<polyline fill=\"none\" " + style + " points=\"";
        for (const auto& p : pts) {
            svg += px(p.x) + "," + py(p.y) + " ";
        }
        svg += "\"/>\n";
    };

    std::vector<Vec2> hist;
    for (const auto& s : scene.target_history) {
        if (s.valid) {
            hist.push_back(s.position);
        }
    }
    polyline(hist, "stroke=\"#202124\" stroke-width=\"0.3\"");
    polyline(scene.future_gt, "stroke=\"#1a73e8\" stroke-width=\"0.35\"");

    if (prediction != nullptr && !prediction->modes.empty()) {
        double top = 0.0;
        for (double p : prediction->mode_probs) {
            top = std::max(top, p);
        }
        for (std::size_t m = 0; m < prediction->modes.size(); ++m) {
            const double prob =
                m < prediction->mode_probs.size() ? prediction->mode_probs[m] : 0.0;
            const double opacity = top > 0.0 ? 0.25 + 0.75 * prob / top : 1.0;
            polyline(prediction->modes[m], "stroke=\"#d93025\" stroke-width=\"0.3\" "
                                           "stroke-opacity=\"" +
                                               detail::fmt3(opacity) + "\"");
        }
    }
    if (!hist.empty()) {
        svg += "<circle cx=\"" + px(hist.back().x) + "\" cy=\"" + py(hist.back().y) +
               "\" r=\"0.7\" fill=\"#202124\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

struct PlotSeries {
    std::string label;
    std::string color = "#1a73e8";
    std::vector<std::pair<double, double>> points;
    bool line = true;    // connect the points
    bool markers = true; // draw circles at the points
};

struct PlotOptions {
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    double width = 640.0;
    double height = 440.0;
};

/// Generic scatter/line plot. Log axes draw decade gridlines; NaN points
/// are skipped. Tick labels use shortest-form %g, geometry uses %.3f.
inline std::string svg_plot(const std::vector<PlotSeries>& series, const PlotOptions& opts) {
    const double left = 64.0;
    const double right = 16.0;
    const double top = 18.0;
    const double bottom = 46.0;

    double min_x = std::numeric_limits<double>::infinity();
    double max_x = -min_x;
    double min_y = min_x;
    double max_y = -min_x;
    std::size_t usable = 0;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (std::isnan(x) || std::isnan(y)) {
                continue;
            }
            if ((opts.log_x && !(x > 0.0)) || (opts.log_y && !(y > 0.0))) {
                throw Error{"svg_plot: log axes need positive data"};
            }
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
            min_y = std::min(min_y, y);
            max_y = std::max(max_y, y);
            ++usable;
        }
    }
    if (usable == 0) {
        throw Error{"svg_plot: nothing to draw"};
    }
    const auto pad = [](double& lo, double& hi, bool log_axis) {
        double a = log_axis ? std::log10(lo) : lo;
        double b = log_axis ? std::log10(hi) : hi;
        const double span = b - a;
        const double slack = span > 0.0 ? 0.05 * span : (a == 0.0 ? 1.0 : std::abs(a) * 0.05);
        a -= slack;
        b += slack;
        lo = log_axis ? std::pow(10.0, a) : a;
        hi = log_axis ? std::pow(10.0, b) : b;
    };
    pad(min_x, max_x, opts.log_x);
    pad(min_y, max_y, opts.log_y);

    const auto tx = [&](double x) {
        const double a = opts.log_x ? std::log10(min_x) : min_x;
        const double b = opts.log_x ? std::log10(max_x) : max_x;
        const double v = opts.log_x ? std::log10(x) : x;
        return left + (v - a) / (b - a) * (opts.width - left - right);
    };
    const auto ty = [&](double y) {
        const double a = opts.log_y ? std::log10(min_y) : min_y;
        const double b = opts.log_y ? std::log10(max_y) : max_y;
        const double v = opts.log_y ? std::log10(y) : y;
        return opts.height - bottom - (v - a) / (b - a) * (opts.height - top - bottom);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt3(opts.width) +
           "\" height=\"" + detail::fmt3(opts.height) + "\" viewBox=\"0 0 " +
           detail::fmt3(opts.width) + " " + detail::fmt3(opts.height) +
           "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

    // Ticks: decades on log axes, five even steps otherwise.
    const auto ticks = [](double lo, double hi, bool log_axis) {
        std::vector<double> out;
        if (log_axis) {
            for (int e = static_cast<int>(std::ceil(std::log10(lo)));
                 e <= static_cast<int>(std::floor(std::log10(hi))); ++e) {
                out.push_back(std::pow(10.0, e));
            }
            if (out.empty()) {
                out = {lo, hi};
            }
        } else {
            for (int i = 0; i <= 4; ++i) {
                out.push_back(lo + (hi - lo) * i / 4.0);
            }
        }
        return out;
    };
    for (double x : ticks(min_x, max_x, opts.log_x)) {
        const auto gx = detail::fmt3(tx(x));
        svg += "<line x1=\"" + gx + "\" y1=\"" + detail::fmt3(top) + "\" x2=\"" + gx +
               "\" y2=\"" + detail::fmt3(opts.height - bottom) +
               "\" stroke=\"#e8eaed\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + gx + "\" y=\"" + detail::fmt3(opts.height - bottom + 16.0) +
               "\" text-anchor=\"middle\">" + detail::fmt_label(x) + "</text>\n";
    }
    for (double y : ticks(min_y, max_y, opts.log_y)) {
        const auto gy = detail::fmt3(ty(y));
        svg += "<line x1=\"" + detail::fmt3(left) + "\" y1=\"" + gy + "\" x2=\"" +
               detail::fmt3(opts.width - right) + "\" y2=\"" + gy +
               "\" stroke=\"#e8eaed\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + detail::fmt3(left - 6.0) + "\" y=\"" + gy +
               "\" text-anchor=\"end\" dominant-baseline=\"middle\">" + detail::fmt_label(y) +
               "</text>\n";
    }
    svg += "<rect x=\"" + detail::fmt3(left) + "\" y=\"" + detail::fmt3(top) + "\" width=\"" +
           detail::fmt3(opts.width - left - right) + "\" height=\"" +
           detail::fmt3(opts.height - top - bottom) +
           "\" fill=\"none\" stroke=\"#5f6368\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + detail::fmt3((left + opts.width - right) / 2.0) + "\" y=\"" +
           detail::fmt3(opts.height - 10.0) + "\" text-anchor=\"middle\">" + opts.x_label +
           "</text>\n";
    svg += "<text x=\"14\" y=\"" + detail::fmt3((top + opts.height - bottom) / 2.0) +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
           detail::fmt3((top + opts.height - bottom) / 2.0) + ")\">" + opts.y_label +
           "</text>\n";

    double legend_y = top + 14.0;
    for (const auto& s : series) {
        std::string path_points;
        for (const auto& [x, y] : s.points) {
            if (std::isnan(x) || std::isnan(y)) {
                continue;
            }
            path_points += detail::fmt3(tx(x)) + "," + detail::fmt3(ty(y)) + " ";
            if (s.markers) {
                svg += "<circle cx=\"" + detail::fmt3(tx(x)) + "\" cy=\"" + detail::fmt3(ty(y)) +
                       "\" r=\"3\" fill=\"" + s.color + "\"/>\n";
            }
        }
        if (s.line && !path_points.empty()) {
            svg += "<polyline fill=\"none\" stroke=\"" + s.color +
                   "\" stroke-width=\"1.5\" points=\"" + path_points + "\"/>\n";
        }
        if (!s.label.empty()) {
            const double lx = opts.width - right - 150.0;
            svg += "<line x1=\"" + detail::fmt3(lx) + "\" y1=\"" + detail::fmt3(legend_y - 4.0) +
                   "\" x2=\"" + detail::fmt3(lx + 18.0) + "\" y2=\"" +
                   detail::fmt3(legend_y - 4.0) + "\" stroke=\"" + s.color +
                   "\" stroke-width=\"2\"/>\n";
            svg += "<text x=\"" + detail::fmt3(lx + 24.0) + "\" y=\"" + detail::fmt3(legend_y) +
                   "\">" + s.label + "</text>\n";
            legend_y += 16.0;
        }
    }
    svg += "</svg>\n";
    return svg;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out{path};
    if (!out) {
        throw IoError{"cannot open file for writing: " + path, 0};
    }
    out << content;
    if (!out.good()) {
        throw IoError{"failed writing file: " + path, 0};
    }
}

}  // namespace dgk
