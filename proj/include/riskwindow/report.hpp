#ifndef RISKWINDOW_REPORT_HPP
#define RISKWINDOW_REPORT_HPP

#include <algorithm>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace riskwindow {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

// Minimal SVG line chart. The CSV next to it is the authoritative artifact;
// the image is a convenience rendering.
inline void write_svg_lines(std::ostream& os, const std::string& title,
                            const std::vector<Series>& series, int width = 640, int height = 400) {
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};
    double xmin = std::numeric_limits<double>::max(), xmax = std::numeric_limits<double>::lowest();
    double ymin = xmin, ymax = xmax;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax - xmin < 1e-12) xmax = xmin + 1;
    if (ymax - ymin < 1e-12) ymax = ymin + 1;
    const double ml = 60, mr = 20, mt = 40, mb = 40;
    auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
    auto sy = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
       << title << "</text>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
       << height - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml << "\" y=\"" << height - mb + 16 << "\" font-size=\"10\">" << xmin
       << "</text>\n";
    os << "<text x=\"" << width - mr << "\" y=\"" << height - mb + 16
       << "\" text-anchor=\"end\" font-size=\"10\">" << xmax << "</text>\n";
    os << "<text x=\"" << ml - 4 << "\" y=\"" << height - mb
       << "\" text-anchor=\"end\" font-size=\"10\">" << ymin << "</text>\n";
    os << "<text x=\"" << ml - 4 << "\" y=\"" << mt << "\" text-anchor=\"end\" font-size=\"10\">"
       << ymax << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = colors[i % 5];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[i].points) os << sx(x) << ',' << sy(y) << ' ';
        os << "\"/>\n";
        os << "<text x=\"" << width - mr - 4 << "\" y=\"" << mt + 14 * static_cast<double>(i + 1)
           << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << series[i].name
           << "</text>\n";
    }
    os << "</svg>\n";
}

inline void write_svg_file(const std::string& path, const std::string& title,
                           const std::vector<Series>& series) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_svg_lines(os, title, series);
}

// Simple horizontal bar chart for feature importances.
inline void write_svg_bars(std::ostream& os, const std::string& title,
                           const std::vector<std::pair<std::string, double>>& bars, int width = 640) {
    const int row_h = 22;
    const double ml = 180, mr = 20, mt = 40;
    const int height = mt + row_h * static_cast<int>(bars.size()) + 20;
    double vmax = 1e-12;
    for (const auto& [n, v] : bars) vmax = std::max(vmax, v);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
       << title << "</text>\n";
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const double y = mt + row_h * static_cast<double>(i);
        const double w = bars[i].second / vmax * (width - ml - mr);
        os << "<text x=\"" << ml - 6 << "\" y=\"" << y + 14
           << "\" text-anchor=\"end\" font-size=\"11\">" << bars[i].first << "</text>\n";
        os << "<rect x=\"" << ml << "\" y=\"" << y + 2 << "\" width=\"" << w << "\" height=\""
           << row_h - 6 << "\" fill=\"#1f77b4\"/>\n";
        os << "<text x=\"" << ml + w + 4 << "\" y=\"" << y + 14 << "\" font-size=\"10\">"
           << bars[i].second << "</text>\n";
    }
    os << "</svg>\n";
}

inline void write_svg_bars_file(const std::string& path, const std::string& title,
                                const std::vector<std::pair<std::string, double>>& bars) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_svg_bars(os, title, bars);
}

}  // namespace riskwindow

#endif
