#include "softrl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace softrl::svg {

namespace {

constexpr double kCanvas = 640.0;
constexpr double kMargin = 60.0;

struct Mapper {
    double min_x, min_y, scale;
    double px(double x) const { return kMargin + (x - min_x) * scale; }
    // SVG y grows downward; flip so +y plots upward.
    double py(double y, double max_y) const { return kMargin + (max_y - y) * scale; }
    double max_y;
};

void append_polyline(std::ostringstream& out, const std::vector<geometry::Point3>& pts,
                     const Mapper& m, const std::string& style) {
    if (pts.empty()) return;
    out << "  <polyline fill=\"none\" " << style << " points=\"";
    for (const auto& p : pts)
        out << softrl::str_printf("%.2f,%.2f ", m.px(p.x), m.py(p.y, m.max_y));
    out << "\"/>\n";
}

}  // namespace

std::string xy_overlay(const std::vector<geometry::Point3>& target,
                       const std::vector<geometry::Point3>& achieved,
                       const std::string& title) {
    double min_x = 0, max_x = 1, min_y = 0, max_y = 1;
    bool first = true;
    for (const auto* poly : {&target, &achieved})
        for (const auto& p : *poly) {
            if (first) {
                min_x = max_x = p.x;
                min_y = max_y = p.y;
                first = false;
            }
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
    double span = std::max({max_x - min_x, max_y - min_y, 1e-6});
    double pad = 0.05 * span;
    min_x -= pad;
    min_y -= pad;
    span += 2 * pad;

    Mapper m{min_x, min_y, (kCanvas - 2 * kMargin) / span, min_y + span};

    std::ostringstream out;
    out << str_printf(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 %.0f %.0f\">\n", kCanvas,
        kCanvas);
    out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << str_printf(
        "  <text x=\"%.0f\" y=\"30\" font-family=\"sans-serif\" font-size=\"16\" "
        "text-anchor=\"middle\">%s</text>\n",
        kCanvas / 2, title.c_str());

    // axes with min/max tick labels (mm)
    double x0 = kMargin, x1 = kCanvas - kMargin, y0 = kCanvas - kMargin, y1 = kMargin;
    out << str_printf("  <line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" "
                      "stroke=\"#444\"/>\n", x0, y0, x1, y0);
    out << str_printf("  <line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" "
                      "stroke=\"#444\"/>\n", x0, y0, x0, y1);
    out << str_printf("  <text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" "
                      "font-size=\"12\">x: %.1f to %.1f mm</text>\n",
                      x0, y0 + 25, min_x, min_x + span);
    out << str_printf("  <text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" "
                      "font-size=\"12\" transform=\"rotate(-90 %.0f %.0f)\">y: %.1f to %.1f "
                      "mm</text>\n",
                      x0 - 20, y0, x0 - 20, y0, min_y, min_y + span);

    append_polyline(out, target, m,
                    "stroke=\"#c0392b\" stroke-width=\"2\" stroke-dasharray=\"8 5\"");
    append_polyline(out, achieved, m, "stroke=\"#2471a3\" stroke-width=\"1.5\"");

    out << str_printf("  <text x=\"%.0f\" y=\"50\" font-family=\"sans-serif\" font-size=\"12\" "
                      "fill=\"#c0392b\">dashed: target</text>\n", kCanvas - 220.0);
    out << str_printf("  <text x=\"%.0f\" y=\"66\" font-family=\"sans-serif\" font-size=\"12\" "
                      "fill=\"#2471a3\">solid: achieved</text>\n", kCanvas - 220.0);
    out << "</svg>\n";
    return out.str();
}

void write_xy_overlay(const std::string& path, const std::vector<geometry::Point3>& target,
                      const std::vector<geometry::Point3>& achieved, const std::string& title) {
    write_text_file(path, xy_overlay(target, achieved, title));
}

}  // namespace softrl::svg
