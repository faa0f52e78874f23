#pragma once

#include <string>
#include <vector>

#include "camera.hpp"
#include "embedder.hpp"
#include "image.hpp"
#include "noise.hpp"

namespace viewmark {

struct Frame {
  Image image;
  CameraPose pose;
};

struct Scene {
  CameraIntrinsics intrinsics;
  std::vector<Frame> frames;
  std::string name;
};

// Reads a NeRF-synthetic style scene: transforms_<split>.json with
// camera_angle_x and frames[{file_path, transform_matrix}], images as PNG.
// downscale is an integer factor applied to both the images and the focal
// length. Two loads of the same root are bitwise identical.
Scene load_scene(const std::string& root, const std::string& split, int downscale);

// Assembles the watermarked, noise-augmented training set: frames listed in
// embed_indices are replaced by embed(frame, watermark); the others pass
// through the noise layer with per-frame seeds. Poses and intrinsics are
// never touched. noise_cfg.apply_to_embedded extends noise to the
// watermarked frames as well.
Scene build_training_set(const Scene& scene, const Image& watermark, const EmbedderModel& embedder,
                         const NoiseConfig& noise_cfg, const std::vector<size_t>& embed_indices);

// Index of the training frame whose pose is nearest the given pose.
size_t nearest_frame_index(const Scene& scene, const CameraPose& pose);

}  // namespace viewmark
