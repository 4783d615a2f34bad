#pragma once

#include <string>
#include <vector>

namespace ipk::svg {

struct Point {
    double x, y;
};

struct Series {
    std::string label;
    std::string color;
    std::vector<Point> medians;        // (M, median error)
    std::vector<Point> lower_whisker;  // interquartile annotations
    std::vector<Point> upper_whisker;
};

struct Guide {
    std::string label;
    double slope;  // log-log slope; anchored at the first median of a series
    double anchor_x, anchor_y;
};

// Fixed-style log-log scatter plot; returns the SVG document text.
std::string loglog_plot(const std::string& title, const std::vector<Series>& series,
                        const std::vector<Guide>& guides, int width = 640, int height = 480);

// pixel position helpers, exposed so tests can check marker/guide collinearity
struct Frame {
    double min_x, max_x, min_y, max_y;  // log10 ranges
    int width, height;
    double px(double x) const;
    double py(double y) const;
};
Frame make_frame(const std::vector<Series>& series, int width, int height);

}  // namespace ipk::svg
