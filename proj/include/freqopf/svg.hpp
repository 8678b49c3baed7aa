#pragma once

// Minimal hand-rolled SVG charts (polylines, scatter, axes, limit lines).
// Pure string generation; no plotting dependency.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace freqopf::svg {

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    bool points_only = false;  // scatter instead of polyline
};

struct HLine {
    double y = 0;
    std::string label;
    std::string color = "#d62728";
};

struct Chart {
    std::string title, x_label, y_label;
    std::vector<Series> series;
    std::vector<HLine> hlines;
    int width = 720, height = 480;
};

namespace detail {
inline std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}
}  // namespace detail

inline std::string render(const Chart& c) {
    const double ml = 70, mr = 20, mt = 40, mb = 55;
    const double pw = c.width - ml - mr, ph = c.height - mt - mb;

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& s : c.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (first) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                first = false;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    for (const auto& h : c.hlines) {
        if (first) { ymin = ymax = h.y; first = false; }
        ymin = std::min(ymin, h.y);
        ymax = std::max(ymax, h.y);
    }
    if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
    if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
    double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto X = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
    auto Y = [&](double v) { return mt + ph - (v - ymin) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << c.width << "\" height=\""
       << c.height << "\" viewBox=\"0 0 " << c.width << " " << c.height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << c.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"16\">" << c.title << "</text>\n";

    // axes + ticks
    os << "<g stroke=\"#333\" stroke-width=\"1\">";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
       << mt + ph << "\"/>";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
       << "\"/></g>\n";
    for (int i = 0; i <= 5; ++i) {
        double fx = xmin + (xmax - xmin) * i / 5.0;
        double fy = ymin + (ymax - ymin) * i / 5.0;
        os << "<line x1=\"" << X(fx) << "\" y1=\"" << mt + ph << "\" x2=\"" << X(fx)
           << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"#333\"/>";
        os << "<text x=\"" << X(fx) << "\" y=\"" << mt + ph + 20
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
           << detail::num(fx) << "</text>\n";
        os << "<line x1=\"" << ml - 5 << "\" y1=\"" << Y(fy) << "\" x2=\"" << ml << "\" y2=\""
           << Y(fy) << "\" stroke=\"#333\"/>";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << Y(fy) + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
           << detail::num(fy) << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << c.height - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << c.x_label
       << "</text>\n";
    os << "<text x=\"18\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
          "transform=\"rotate(-90 18 " << mt + ph / 2 << ")\">" << c.y_label << "</text>\n";

    for (const auto& h : c.hlines) {
        os << "<line x1=\"" << ml << "\" y1=\"" << Y(h.y) << "\" x2=\"" << ml + pw
           << "\" y2=\"" << Y(h.y) << "\" stroke=\"" << h.color
           << "\" stroke-dasharray=\"6,4\"/>\n";
        if (!h.label.empty())
            os << "<text x=\"" << ml + pw - 4 << "\" y=\"" << Y(h.y) - 4
               << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
               << h.color << "\">" << h.label << "</text>\n";
    }

    for (const auto& s : c.series) {
        if (s.points_only) {
            os << "<g fill=\"" << s.color << "\">";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                    os << "<circle cx=\"" << X(s.x[i]) << "\" cy=\"" << Y(s.y[i])
                       << "\" r=\"2.5\"/>";
            os << "</g>\n";
        } else {
            os << "<polyline fill=\"none\" stroke=\"" << s.color
               << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                    os << X(s.x[i]) << "," << Y(s.y[i]) << " ";
            os << "\"/>\n";
        }
    }

    // legend
    double ly = mt + 8;
    for (const auto& s : c.series) {
        if (s.label.empty()) continue;
        os << "<rect x=\"" << ml + pw - 150 << "\" y=\"" << ly - 8
           << "\" width=\"12\" height=\"8\" fill=\"" << s.color << "\"/>";
        os << "<text x=\"" << ml + pw - 133 << "\" y=\"" << ly
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
        ly += 16;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace freqopf::svg
