#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace viewmark {

namespace {

// 5x7 glyphs, one byte per row, bit 4 = leftmost column.
const std::map<char, std::array<unsigned char, 7>>& font() {
  static const std::map<char, std::array<unsigned char, 7>> f = {
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
      {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
      {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
      {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
      {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
      {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
      {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
      {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
      {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
      {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
      {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
      {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
      {'a', {0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F}},
      {'b', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1E}},
      {'c', {0x00, 0x00, 0x0E, 0x10, 0x10, 0x11, 0x0E}},
      {'d', {0x01, 0x01, 0x0D, 0x13, 0x11, 0x11, 0x0F}},
      {'e', {0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E}},
      {'f', {0x06, 0x09, 0x08, 0x1C, 0x08, 0x08, 0x08}},
      {'g', {0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x0E}},
      {'h', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11}},
      {'i', {0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E}},
      {'j', {0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0C}},
      {'k', {0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12}},
      {'l', {0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'m', {0x00, 0x00, 0x1A, 0x15, 0x15, 0x11, 0x11}},
      {'n', {0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11}},
      {'o', {0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E}},
      {'p', {0x00, 0x00, 0x1E, 0x11, 0x1E, 0x10, 0x10}},
      {'q', {0x00, 0x00, 0x0D, 0x13, 0x0F, 0x01, 0x01}},
      {'r', {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10}},
      {'s', {0x00, 0x00, 0x0E, 0x10, 0x0E, 0x01, 0x1E}},
      {'t', {0x08, 0x08, 0x1C, 0x08, 0x08, 0x09, 0x06}},
      {'u', {0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0D}},
      {'v', {0x00, 0x00, 0x11, 0x11, 0x11, 0x0A, 0x04}},
      {'w', {0x00, 0x00, 0x11, 0x11, 0x15, 0x15, 0x0A}},
      {'x', {0x00, 0x00, 0x11, 0x0A, 0x04, 0x0A, 0x11}},
      {'y', {0x00, 0x00, 0x11, 0x11, 0x0F, 0x01, 0x0E}},
      {'z', {0x00, 0x00, 0x1F, 0x02, 0x04, 0x08, 0x1F}},
  };
  return f;
}

void put_pixel(Image& img, int x, int y, float r, float g, float b) {
  if (x < 0 || x >= img.width || y < 0 || y >= img.height) return;
  img.at(y, x, 0) = r;
  img.at(y, x, 1) = g;
  img.at(y, x, 2) = b;
}

void draw_line(Image& img, int x0, int y0, int x1, int y1, float r, float g, float b) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    put_pixel(img, x0, y0, r, g, b);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

std::string format_tick(double v) {
  char buf[32];
  snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Ticks {
  std::vector<double> values;
};

Ticks nice_ticks(double lo, double hi, int target) {
  Ticks t;
  if (hi <= lo) hi = lo + 1.0;
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * m >= raw) {
      step = mag * m;
      break;
    }
  }
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12; v += step) t.values.push_back(v);
  return t;
}

}  // namespace

void draw_text(Image& img, int x, int y, const std::string& text, float r, float g, float b) {
  int cx = x;
  for (char ch : text) {
    const auto it = font().find(ch);
    if (it != font().end()) {
      for (int row = 0; row < 7; ++row) {
        for (int col = 0; col < 5; ++col) {
          if (it->second[row] & (1 << (4 - col))) put_pixel(img, cx + col, y + row, r, g, b);
        }
      }
    }
    cx += 6;
  }
}

Image line_chart(const std::vector<double>& xs, const std::vector<double>& ys, int width,
                 int height, const std::string& x_label, const std::string& y_label) {
  if (xs.size() != ys.size() || xs.empty()) throw ValidationError("line_chart: bad series");
  Image img(height, width, 3, 1.0f);
  const int ml = 52, mr = 12, mt = 12, mb = 34;
  const int x0 = ml, x1 = width - mr, y0 = height - mb, y1 = mt;

  double xmin = *std::min_element(xs.begin(), xs.end());
  double xmax = *std::max_element(xs.begin(), xs.end());
  double ymin = *std::min_element(ys.begin(), ys.end());
  double ymax = *std::max_element(ys.begin(), ys.end());
  if (xmax == xmin) xmax = xmin + 1;
  const double pad = 0.06 * (ymax - ymin == 0 ? 1.0 : ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto px = [&](double x) { return x0 + static_cast<int>((x - xmin) / (xmax - xmin) * (x1 - x0)); };
  auto py = [&](double y) { return y0 - static_cast<int>((y - ymin) / (ymax - ymin) * (y0 - y1)); };

  for (double tv : nice_ticks(ymin, ymax, 5).values) {
    const int y = py(tv);
    draw_line(img, x0, y, x1, y, 0.88f, 0.88f, 0.88f);
    draw_text(img, 4, y - 3, format_tick(tv), 0.2f, 0.2f, 0.2f);
    draw_line(img, x0 - 3, y, x0, y, 0, 0, 0);
  }
  for (double tv : nice_ticks(xmin, xmax, 6).values) {
    const int x = px(tv);
    draw_line(img, x, y0, x, y0 + 3, 0, 0, 0);
    draw_text(img, x - 8, y0 + 6, format_tick(tv), 0.2f, 0.2f, 0.2f);
  }
  draw_line(img, x0, y0, x1, y0, 0, 0, 0);
  draw_line(img, x0, y0, x0, y1, 0, 0, 0);
  draw_text(img, (x0 + x1) / 2 - 3 * static_cast<int>(x_label.size()), height - 12, x_label, 0,
            0, 0);
  draw_text(img, 4, 2, y_label, 0, 0, 0);

  for (size_t i = 0; i + 1 < xs.size(); ++i) {
    draw_line(img, px(xs[i]), py(ys[i]), px(xs[i + 1]), py(ys[i + 1]), 0.12f, 0.29f, 0.6f);
  }
  for (size_t i = 0; i < xs.size(); ++i) {
    const int cx = px(xs[i]), cy = py(ys[i]);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) put_pixel(img, cx + dx, cy + dy, 0.75f, 0.15f, 0.1f);
    }
  }
  return img;
}

Image bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                int width, int height, const std::string& y_label) {
  if (labels.size() != values.size() || labels.empty()) throw ValidationError("bar_chart: bad series");
  Image img(height, width, 3, 1.0f);
  const int ml = 52, mr = 12, mt = 12, mb = 34;
  const int x0 = ml, x1 = width - mr, y0 = height - mb, y1 = mt;

  const double vmax = std::max(1e-9, *std::max_element(values.begin(), values.end()) * 1.08);
  auto py = [&](double v) { return y0 - static_cast<int>(v / vmax * (y0 - y1)); };

  for (double tv : nice_ticks(0, vmax, 5).values) {
    const int y = py(tv);
    draw_line(img, x0, y, x1, y, 0.88f, 0.88f, 0.88f);
    draw_text(img, 4, y - 3, format_tick(tv), 0.2f, 0.2f, 0.2f);
  }
  draw_line(img, x0, y0, x1, y0, 0, 0, 0);
  draw_line(img, x0, y0, x0, y1, 0, 0, 0);
  draw_text(img, 4, 2, y_label, 0, 0, 0);

  const int n = static_cast<int>(values.size());
  const int slot = (x1 - x0) / n;
  for (int i = 0; i < n; ++i) {
    const int bx0 = x0 + i * slot + slot / 6;
    const int bx1 = x0 + (i + 1) * slot - slot / 6;
    const int by = py(std::max(0.0, values[i]));
    for (int x = bx0; x <= bx1; ++x) draw_line(img, x, y0 - 1, x, by, 0.3f, 0.45f, 0.7f);
    const int lx = (bx0 + bx1) / 2 - 3 * static_cast<int>(labels[i].size());
    draw_text(img, std::max(x0, lx), y0 + 6, labels[i], 0, 0, 0);
  }
  return img;
}

}  // namespace viewmark
