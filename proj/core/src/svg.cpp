#include "ipk/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ipk::svg {

namespace {
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 50.0;
}  // namespace

double Frame::px(double x) const {
    const double t = (std::log10(x) - min_x) / (max_x - min_x);
    return kMarginLeft + t * (width - kMarginLeft - kMarginRight);
}

double Frame::py(double y) const {
    const double t = (std::log10(y) - min_y) / (max_y - min_y);
    return (height - kMarginBottom) - t * (height - kMarginTop - kMarginBottom);
}

Frame make_frame(const std::vector<Series>& series, int width, int height) {
    Frame f;
    f.width = width;
    f.height = height;
    f.min_x = f.min_y = 1e300;
    f.max_x = f.max_y = -1e300;
    for (const auto& s : series) {
        for (const auto& lists : {&s.medians, &s.lower_whisker, &s.upper_whisker})
            for (const auto& p : *lists) {
                if (p.x <= 0.0 || p.y <= 0.0) throw std::invalid_argument("loglog_plot: nonpositive data");
                f.min_x = std::min(f.min_x, std::log10(p.x));
                f.max_x = std::max(f.max_x, std::log10(p.x));
                f.min_y = std::min(f.min_y, std::log10(p.y));
                f.max_y = std::max(f.max_y, std::log10(p.y));
            }
    }
    if (f.min_x > f.max_x) throw std::invalid_argument("loglog_plot: empty series");
    const double pad_x = std::max(0.05, 0.05 * (f.max_x - f.min_x));
    const double pad_y = std::max(0.05, 0.05 * (f.max_y - f.min_y));
    f.min_x -= pad_x;
    f.max_x += pad_x;
    f.min_y -= pad_y;
    f.max_y += pad_y;
    return f;
}

std::string loglog_plot(const std::string& title, const std::vector<Series>& series,
                        const std::vector<Guide>& guides, int width, int height) {
    if (series.empty()) throw std::invalid_argument("loglog_plot: no series");
    for (const auto& s : series)
        if (s.medians.empty()) throw std::invalid_argument("loglog_plot: empty series: " + s.label);

    const Frame f = make_frame(series, width, height);
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
        << "</text>\n";

    // axes
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << height - kMarginBottom << "\" x2=\""
        << width - kMarginRight << "\" y2=\"" << height - kMarginBottom
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
        << "\" y2=\"" << height - kMarginBottom << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">M (log)</text>\n";
    out << "<text x=\"16\" y=\"" << height / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " << height / 2
        << ")\">error (log)</text>\n";

    // decade ticks
    for (int e = static_cast<int>(std::ceil(f.min_x)); e <= static_cast<int>(std::floor(f.max_x)); ++e) {
        const double x = f.px(std::pow(10.0, e));
        out << "<line x1=\"" << x << "\" y1=\"" << height - kMarginBottom << "\" x2=\"" << x
            << "\" y2=\"" << height - kMarginBottom + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << x << "\" y=\"" << height - kMarginBottom + 18
            << "\" text-anchor=\"middle\" font-size=\"10\">1e" << e << "</text>\n";
    }
    for (int e = static_cast<int>(std::ceil(f.min_y)); e <= static_cast<int>(std::floor(f.max_y)); ++e) {
        const double y = f.py(std::pow(10.0, e));
        out << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kMarginLeft
            << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << y + 3
            << "\" text-anchor=\"end\" font-size=\"10\">1e" << e << "</text>\n";
    }

    for (const auto& g : guides) {
        // dashed power-law guide across the frame, anchored at (anchor_x, anchor_y)
        const double x0 = std::pow(10.0, f.min_x + 0.02), x1 = std::pow(10.0, f.max_x - 0.02);
        const double y0 = g.anchor_y * std::pow(x0 / g.anchor_x, g.slope);
        const double y1 = g.anchor_y * std::pow(x1 / g.anchor_x, g.slope);
        out << "<line x1=\"" << f.px(x0) << "\" y1=\"" << f.py(y0) << "\" x2=\"" << f.px(x1)
            << "\" y2=\"" << f.py(y1)
            << "\" stroke=\"gray\" stroke-dasharray=\"6,4\" stroke-width=\"1.2\"/>\n";
        out << "<text x=\"" << f.px(x1) - 4 << "\" y=\"" << f.py(y1) - 6
            << "\" text-anchor=\"end\" font-size=\"11\" fill=\"gray\">" << g.label << "</text>\n";
    }

    int legend_row = 0;
    for (const auto& s : series) {
        for (std::size_t i = 0; i + 1 < s.medians.size(); ++i)
            out << "<line x1=\"" << f.px(s.medians[i].x) << "\" y1=\"" << f.py(s.medians[i].y)
                << "\" x2=\"" << f.px(s.medians[i + 1].x) << "\" y2=\"" << f.py(s.medians[i + 1].y)
                << "\" stroke=\"" << s.color << "\" stroke-width=\"1\" opacity=\"0.6\"/>\n";
        for (std::size_t i = 0; i < s.medians.size(); ++i) {
            if (i < s.lower_whisker.size() && i < s.upper_whisker.size())
                out << "<line x1=\"" << f.px(s.medians[i].x) << "\" y1=\""
                    << f.py(s.lower_whisker[i].y) << "\" x2=\"" << f.px(s.medians[i].x)
                    << "\" y2=\"" << f.py(s.upper_whisker[i].y) << "\" stroke=\"" << s.color
                    << "\" stroke-width=\"1\"/>\n";
            out << "<circle cx=\"" << f.px(s.medians[i].x) << "\" cy=\"" << f.py(s.medians[i].y)
                << "\" r=\"3.5\" fill=\"" << s.color << "\"/>\n";
        }
        out << "<rect x=\"" << width - 190 << "\" y=\"" << kMarginTop + 14 * legend_row
            << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>\n";
        out << "<text x=\"" << width - 175 << "\" y=\"" << kMarginTop + 14 * legend_row + 9
            << "\" font-size=\"11\">" << s.label << "</text>\n";
        ++legend_row;
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace ipk::svg
