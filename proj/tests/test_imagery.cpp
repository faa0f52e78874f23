#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <png.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "testutil.hpp"
#include "viewmark/image.hpp"

using namespace viewmark;

TEST_CASE("png round trip stays within quantization") {
  const std::string dir = testutil::temp_dir("imagery");

  Image half(8, 8, 3, 0.5f);
  save_image(half, dir + "/half.png");
  Image back = load_image(dir + "/half.png");
  REQUIRE(back.same_shape(half));
  for (size_t i = 0; i < half.data.size(); ++i) {
    CHECK(std::abs(back.data[i] - half.data[i]) <= 1.0f / 255.0f);
  }

  Image rnd = testutil::random_image(17, 23, 3, 5);
  save_image(rnd, dir + "/rnd.png");
  Image rnd2 = load_image(dir + "/rnd.png");
  float max_diff = 0;
  for (size_t i = 0; i < rnd.data.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(rnd.data[i] - rnd2.data[i]));
  }
  CHECK(max_diff <= 1.0f / 255.0f);
}

TEST_CASE("8-bit endpoints map to 0 and 1") {
  const std::string dir = testutil::temp_dir("imagery_ep");
  Image img(3, 3, 3, 0.0f);
  for (int c = 0; c < 3; ++c) img.at(1, 1, c) = 1.0f;  // identity-ish pattern
  save_image(img, dir + "/ep.png");
  Image back = load_image(dir + "/ep.png");
  REQUIRE(back.height == 3);
  REQUIRE(back.width == 3);
  CHECK(back.at(0, 0, 0) == 0.0f);
  CHECK(back.at(1, 1, 0) == 1.0f);
}

TEST_CASE("load with target size resizes bilinearly") {
  const std::string dir = testutil::temp_dir("imagery_rs");
  Image img = testutil::random_image(512, 512, 3, 11);
  save_image(img, dir + "/big.png");
  Image small = load_image(dir + "/big.png", std::make_pair(256, 256));
  CHECK(small.height == 256);
  CHECK(small.width == 256);
  CHECK(small.channels == 3);
}

TEST_CASE("alpha composites over white") {
  const std::string dir = testutil::temp_dir("imagery_a");
  const std::string path = dir + "/rgba.png";
  {
    FILE* fp = fopen(path.c_str(), "wb");
    REQUIRE(fp);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    REQUIRE(setjmp(png_jmpbuf(png)) == 0);
    png_init_io(png, fp);
    png_set_IHDR(png, info, 2, 1, 8, PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    // Pixel 0: transparent black; pixel 1: half-alpha black.
    unsigned char row[8] = {0, 0, 0, 0, 0, 0, 0, 128};
    png_bytep rows[1] = {row};
    png_write_image(png, rows);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    fclose(fp);
  }
  Image img = load_image(path);
  REQUIRE(img.channels == 3);
  CHECK(img.at(0, 0, 0) == doctest::Approx(1.0f));           // fully transparent -> white
  CHECK(img.at(0, 1, 0) == doctest::Approx(1.0f - 128.0f / 255.0f).epsilon(1e-6));
}

TEST_CASE("save rejects non-finite pixels") {
  const std::string dir = testutil::temp_dir("imagery_nan");
  Image img(4, 4, 3, 0.5f);
  img.at(2, 2, 1) = std::nanf("");
  CHECK_THROWS_AS(save_image(img, dir + "/bad.png"), ValidationError);
}

TEST_CASE("missing file and non-image bytes raise distinct errors") {
  const std::string dir = testutil::temp_dir("imagery_err");
  CHECK_THROWS_AS(load_image(dir + "/nope.png"), IoError);
  std::ofstream(dir + "/junk.png") << "definitely not a png";
  CHECK_THROWS_AS(load_image(dir + "/junk.png"), DecodeError);
}

TEST_CASE("clamp01 endpoints and idempotence") {
  Image img(2, 2, 1);
  img.at(0, 0, 0) = 1.2f;
  img.at(0, 1, 0) = -0.3f;
  img.at(1, 0, 0) = 0.7f;
  img.at(1, 1, 0) = 0.0f;
  Image c = clamp01(img);
  CHECK(c.at(0, 0, 0) == 1.0f);
  CHECK(c.at(0, 1, 0) == 0.0f);
  CHECK(c.at(1, 0, 0) == 0.7f);

  Image cc = clamp01(c);
  CHECK(cc.data == c.data);

  img.at(1, 1, 0) = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(clamp01(img), ValidationError);
}

TEST_CASE("resize preserves constant images") {
  Image img(10, 14, 3, 0.25f);
  Image r = resize_bilinear(img, 5, 7);
  for (float v : r.data) CHECK(v == doctest::Approx(0.25f));
}
