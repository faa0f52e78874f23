#include "dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace viewmark {

namespace fs = std::filesystem;
using nlohmann::json;

Scene load_scene(const std::string& root, const std::string& split, int downscale) {
  if (downscale < 1) throw ConfigError("load_scene: downscale must be >= 1");
  const fs::path transforms = fs::path(root) / ("transforms_" + split + ".json");
  std::ifstream in(transforms);
  if (!in) throw IoError(strfmt("load_scene: missing %s", transforms.string().c_str()));

  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DecodeError(strfmt("load_scene: %s: %s", transforms.string().c_str(), e.what()));
  }
  if (!doc.contains("camera_angle_x") || !doc.contains("frames")) {
    throw DecodeError(strfmt("load_scene: %s lacks camera_angle_x/frames",
                             transforms.string().c_str()));
  }
  const double angle_x = doc["camera_angle_x"].get<double>();

  Scene scene;
  scene.name = fs::path(root).filename().string();
  for (size_t i = 0; i < doc["frames"].size(); ++i) {
    const json& jf = doc["frames"][i];
    std::string rel = jf.at("file_path").get<std::string>();
    if (rel.size() < 4 || rel.substr(rel.size() - 4) != ".png") rel += ".png";
    const fs::path img_path = fs::path(root) / fs::path(rel).relative_path();

    Frame frame;
    frame.image = load_image(img_path.string());
    if (downscale > 1) {
      frame.image = resize_bilinear(frame.image, frame.image.height / downscale,
                                    frame.image.width / downscale);
    }

    const json& jm = jf.at("transform_matrix");
    if (jm.size() != 4) throw DecodeError("load_scene: transform_matrix must be 4x4");
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) frame.pose.c2w(r, c) = jm[r][c].get<double>();
    }
    try {
      require_valid_pose(frame.pose, "load_scene");
    } catch (const ValidationError& e) {
      throw ValidationError(strfmt("load_scene: frame %zu (%s): %s", i, rel.c_str(), e.what()));
    }
    scene.frames.push_back(std::move(frame));
  }
  if (scene.frames.size() < 2) {
    throw ValidationError(strfmt("load_scene: scene needs >= 2 frames, found %zu",
                                 scene.frames.size()));
  }

  const Image& first = scene.frames[0].image;
  for (size_t i = 1; i < scene.frames.size(); ++i) {
    if (!scene.frames[i].image.same_shape(first)) {
      throw ValidationError(strfmt("load_scene: frame %zu image size differs", i));
    }
  }
  scene.intrinsics = intrinsics_from_angle_x(first.width, first.height, angle_x);
  return scene;
}

Scene build_training_set(const Scene& scene, const Image& watermark, const EmbedderModel& embedder,
                         const NoiseConfig& noise_cfg, const std::vector<size_t>& embed_indices) {
  for (size_t idx : embed_indices) {
    if (idx >= scene.frames.size()) {
      throw ValidationError(strfmt("build_training_set: embed index %zu out of range", idx));
    }
  }
  const Image wm = resize_bilinear(watermark, scene.intrinsics.height, scene.intrinsics.width);

  Scene out;
  out.intrinsics = scene.intrinsics;
  out.name = scene.name;
  out.frames.resize(scene.frames.size());
  for (size_t i = 0; i < scene.frames.size(); ++i) {
    const bool embedded =
        std::find(embed_indices.begin(), embed_indices.end(), i) != embed_indices.end();
    Frame& dst = out.frames[i];
    dst.pose = scene.frames[i].pose;
    if (embedded) {
      dst.image = embed(embedder, scene.frames[i].image, wm);
      if (noise_cfg.apply_to_embedded) dst.image = apply_noise(dst.image, noise_cfg.for_frame(i));
    } else {
      dst.image = apply_noise(scene.frames[i].image, noise_cfg.for_frame(i));
    }
  }
  return out;
}

size_t nearest_frame_index(const Scene& scene, const CameraPose& pose) {
  if (scene.frames.empty()) throw ValidationError("nearest_frame_index: empty scene");
  size_t best = 0;
  double best_d = pose_distance(scene.frames[0].pose, pose);
  for (size_t i = 1; i < scene.frames.size(); ++i) {
    const double d = pose_distance(scene.frames[i].pose, pose);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace viewmark
