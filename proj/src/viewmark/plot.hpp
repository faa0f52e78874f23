#pragma once

#include <string>
#include <vector>

#include "image.hpp"

namespace viewmark {

// Small dependency-free chart rendering for the report artifacts: a line
// chart (metric vs. angle) and a bar chart (metric per attack). 5x7 bitmap
// font, numeric ticks, nothing fancy.
Image line_chart(const std::vector<double>& xs, const std::vector<double>& ys, int width,
                 int height, const std::string& x_label, const std::string& y_label);

Image bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                int width, int height, const std::string& y_label);

void draw_text(Image& img, int x, int y, const std::string& text, float r, float g, float b);

}  // namespace viewmark
