#pragma once

#include <cstdint>
#include <string>

#include "image.hpp"

namespace viewmark {

// Writes a synthetic scene in the NeRF-synthetic layout (transforms_*.json
// plus PNG frames): a handful of shaded spheres on a white background,
// deliberately asymmetric about the z axis so rotated views are
// distinguishable. Cameras sit on a fixed-radius upper hemisphere looking
// at the origin.
struct SceneGenConfig {
  int image_size = 100;
  int n_train = 36;
  int n_val = 4;
  int n_test = 4;
  double camera_angle_x = 0.6911112070083618;
  double radius = 3.2;
  uint64_t seed = 7;
};

// Depth bounds covering the generated geometry (object cluster through the
// far dome wall) from the default camera radius.
constexpr double kSceneGenTNear = 1.2;
constexpr double kSceneGenTFar = 13.0;

void generate_scene(const std::string& root, const SceneGenConfig& cfg);

// Procedural photo-like watermark: smooth gradients plus solid shapes with
// real dark regions, so correlation against unrelated content stays low.
Image generate_watermark(int height, int width, uint64_t seed);

}  // namespace viewmark
