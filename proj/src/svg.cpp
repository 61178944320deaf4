#include "firmprod/svg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace firmprod::svg {

std::string heatmap(const Matrix& grid, const std::string& title) {
    const int rows = static_cast<int>(grid.rows());
    const int cols = static_cast<int>(grid.cols());
    const int cell = 24;
    const int margin = 8;
    const int header = 48;
    const int width = cols * cell + 2 * margin;
    const int height = rows * cell + header + margin;

    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double v = grid(r, c);
            if (std::isnan(v)) continue;
            if (first || v < lo) lo = v;
            if (first || v > hi) hi = v;
            first = false;
        }
    }
    const double span = hi - lo;

    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\">\n",
                  width, height);
    out += buf;
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">%s</text>\n",
                  margin, title.c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"36\" font-family=\"sans-serif\" font-size=\"11\" "
                  "fill=\"#555\">range [%.6g, %.6g]</text>\n",
                  margin, lo, hi);
    out += buf;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double v = grid(r, c);
            std::string fill = "#dddddd";
            if (!std::isnan(v)) {
                const double t = span > 0.0 ? (v - lo) / span : 0.5;
                const int grey = static_cast<int>(std::lround(235.0 * (1.0 - t)) + 10);
                std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", grey, grey, grey);
                fill = buf;
            }
            std::snprintf(buf, sizeof(buf),
                          "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\" "
                          "stroke=\"#999\" stroke-width=\"0.5\"/>\n",
                          margin + c * cell, header + r * cell, cell, cell, fill.c_str());
            out += buf;
        }
    }
    out += "</svg>\n";
    return out;
}

void write_heatmap(const std::string& path, const Matrix& grid, const std::string& title) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << heatmap(grid, title);
}

}  // namespace firmprod::svg
