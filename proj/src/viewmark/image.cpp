#include "image.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

namespace viewmark {

void require_valid_image(const Image& img, const char* what) {
  if (img.height < 1 || img.width < 1 || img.channels < 1) {
    throw ValidationError(strfmt("%s: empty image", what));
  }
  for (float v : img.data) {
    if (!std::isfinite(v)) throw ValidationError(strfmt("%s: non-finite pixel", what));
    if (v < 0.0f || v > 1.0f) {
      throw ValidationError(strfmt("%s: pixel %g outside [0,1]", what, v));
    }
  }
}

Image clamp01(const Image& img) {
  Image out = img;
  for (float& v : out.data) {
    if (!std::isfinite(v)) throw ValidationError("clamp01: non-finite input");
    v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  }
  return out;
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ValidationError("resize_bilinear: bad target size");
  if (out_h == img.height && out_w == img.width) return img;
  Image out(out_h, out_w, img.channels);
  const float sy = static_cast<float>(img.height) / out_h;
  const float sx = static_cast<float>(img.width) / out_w;
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < out_h; ++y) {
      // Sample at pixel centers in source coordinates.
      float fy = (y + 0.5f) * sy - 0.5f;
      int y0 = static_cast<int>(std::floor(fy));
      float wy = fy - y0;
      int y0c = std::min(std::max(y0, 0), img.height - 1);
      int y1c = std::min(y0 + 1, img.height - 1);
      for (int x = 0; x < out_w; ++x) {
        float fx = (x + 0.5f) * sx - 0.5f;
        int x0 = static_cast<int>(std::floor(fx));
        float wx = fx - x0;
        int x0c = std::min(std::max(x0, 0), img.width - 1);
        int x1c = std::min(x0 + 1, img.width - 1);
        float top = img.at(y0c, x0c, c) * (1 - wx) + img.at(y0c, x1c, c) * wx;
        float bot = img.at(y1c, x0c, c) * (1 - wx) + img.at(y1c, x1c, c) * wx;
        out.at(y, x, c) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

Image load_image(const std::string& path, std::optional<std::pair<int, int>> target_size) {
  FilePtr fp(fopen(path.c_str(), "rb"));
  if (!fp) throw IoError(strfmt("load_image: cannot open %s", path.c_str()));

  unsigned char sig[8];
  if (fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8)) {
    throw DecodeError(strfmt("load_image: %s is not a PNG", path.c_str()));
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError("load_image: libpng init failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<unsigned char> raw;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError(strfmt("load_image: failed to decode %s", path.c_str()));
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  // Normalize everything to 8-bit RGBA, then composite below.
  png_set_strip_16(png);
  png_set_packing(png);
  png_set_expand(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_add_alpha(png, 0xFF, PNG_FILLER_AFTER);
  png_read_update_info(png, info);

  const int w = png_get_image_width(png, info);
  const int h = png_get_image_height(png, info);
  raw.resize(static_cast<size_t>(h) * w * 4);
  row_ptrs.resize(h);
  for (int y = 0; y < h; ++y) row_ptrs[y] = raw.data() + static_cast<size_t>(y) * w * 4;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(h, w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const unsigned char* p = &raw[(static_cast<size_t>(y) * w + x) * 4];
      float a = p[3] / 255.0f;
      for (int c = 0; c < 3; ++c) {
        // Composite over white background.
        img.at(y, x, c) = (p[c] / 255.0f) * a + (1.0f - a);
      }
    }
  }
  if (target_size) img = resize_bilinear(img, target_size->first, target_size->second);
  return img;
}

void save_image(const Image& img, const std::string& path) {
  require_valid_image(img, "save_image");
  if (img.channels != 3) throw ValidationError("save_image: expected 3 channels");

  FilePtr fp(fopen(path.c_str(), "wb"));
  if (!fp) throw IoError(strfmt("save_image: cannot open %s for writing", path.c_str()));

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("save_image: libpng init failed");
  }
  std::vector<unsigned char> raw(static_cast<size_t>(img.height) * img.width * 3);
  std::vector<png_bytep> row_ptrs(img.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(strfmt("save_image: failed to write %s", path.c_str()));
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        float v = img.at(y, x, c);
        raw[(static_cast<size_t>(y) * img.width + x) * 3 + c] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
    row_ptrs[y] = raw.data() + static_cast<size_t>(y) * img.width * 3;
  }
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace viewmark
