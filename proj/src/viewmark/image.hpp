#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace viewmark {

// Pixel grid stored channel-planar (index (c*H + y)*W + x), float32.
// Pixels are linear RGB normalized to [0,1]; the 255 dynamic range only
// appears inside metric constants. The same container carries network
// feature maps, where `channels` can be large and values are unbounded.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c), data(static_cast<size_t>(h) * w * c, fill) {}

  float& at(int y, int x, int c) { return data[(static_cast<size_t>(c) * height + y) * width + x]; }
  float at(int y, int x, int c) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  float* plane(int c) { return data.data() + static_cast<size_t>(c) * height * width; }
  const float* plane(int c) const { return data.data() + static_cast<size_t>(c) * height * width; }

  size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

// Throws ValidationError unless every element is finite and within [0,1].
void require_valid_image(const Image& img, const char* what);

// Elementwise min(max(x,0),1). Rejects non-finite input.
Image clamp01(const Image& img);

// Bilinear resample to (out_h, out_w), any channel count.
Image resize_bilinear(const Image& img, int out_h, int out_w);

// 8-bit PNG load. RGBA alpha is composited over white; gray is expanded.
// Result always has 3 channels, values in [0,1]. Optional bilinear resize.
Image load_image(const std::string& path,
                 std::optional<std::pair<int, int>> target_size = std::nullopt);

// 8-bit RGB PNG write. A reload differs by at most 1/255 per channel.
void save_image(const Image& img, const std::string& path);

}  // namespace viewmark
