#include "scenegen.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "camera.hpp"
#include "json.hpp"

namespace viewmark {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Sphere {
  Eigen::Vector3d center;
  double radius;
  Eigen::Vector3d albedo;
};

// Asymmetric arrangement; every azimuth shows a different silhouette.
const std::vector<Sphere>& scene_spheres() {
  static const std::vector<Sphere> spheres = {
      {{0.90, 0.05, 0.00}, 0.55, {0.85, 0.15, 0.10}},
      {{-0.50, 0.80, 0.15}, 0.45, {0.10, 0.25, 0.85}},
      {{-0.25, -0.85, -0.20}, 0.40, {0.10, 0.70, 0.20}},
      {{0.15, 0.30, 0.60}, 0.32, {0.95, 0.80, 0.10}},
      {{0.05, -0.30, -0.65}, 0.35, {0.55, 0.15, 0.75}},
      {{-0.85, -0.15, 0.45}, 0.30, {0.90, 0.45, 0.10}},
      {{0.45, 0.85, -0.35}, 0.28, {0.15, 0.75, 0.75}},
  };
  return spheres;
}

// Enclosing textured dome. Every camera ray hits something structured;
// frames have no flat background, which is what lets a small conv
// extractor key the whole watermark onto the render.
constexpr double kDomeRadius = 9.0;

const Eigen::Vector3d kLightDir = Eigen::Vector3d(0.45, 0.25, 0.86).normalized();

Eigen::Vector3d dome_color(const Eigen::Vector3d& dir) {
  // Broad directional gradients, asymmetric in azimuth. Kept low frequency:
  // the dome exists to give every pixel position-dependent structure, and a
  // smooth field is cheap for the radiance field to fit.
  const double az = std::atan2(dir.y(), dir.x());
  const double el = std::asin(std::clamp(dir.z(), -1.0, 1.0));
  const double a = 0.5 + 0.5 * std::sin(2.0 * az + 0.8 * el);
  const double b = 0.5 + 0.5 * std::sin(az - 1.5 * el + 1.1);
  return {0.50 + 0.32 * a - 0.08 * b, 0.52 + 0.24 * b, 0.58 + 0.26 * (1.0 - a) * b};
}

Eigen::Vector3d shade_ray(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
  double best_t = 1e30;
  const Sphere* hit = nullptr;
  for (const Sphere& s : scene_spheres()) {
    const Eigen::Vector3d oc = origin - s.center;
    const double b = oc.dot(dir);
    const double c = oc.squaredNorm() - s.radius * s.radius;
    const double disc = b * b - c;
    if (disc < 0) continue;
    const double t = -b - std::sqrt(disc);
    if (t > 1e-4 && t < best_t) {
      best_t = t;
      hit = &s;
    }
  }
  if (!hit) {
    // Camera sits inside the dome: take the outgoing intersection.
    const double b = origin.dot(dir);
    const double c = origin.squaredNorm() - kDomeRadius * kDomeRadius;
    const double t = -b + std::sqrt(std::max(0.0, b * b - c));
    const Eigen::Vector3d p = origin + t * dir;
    return dome_color(p.normalized());
  }
  const Eigen::Vector3d p = origin + best_t * dir;
  const Eigen::Vector3d n = (p - hit->center).normalized();
  const double lambert = 0.35 + 0.65 * std::max(0.0, n.dot(kLightDir));
  // Mild surface banding keyed to position, view-consistent.
  const double band = 0.88 + 0.12 * std::sin(4.0 * p.x() + 3.0 * p.y() + 3.5 * p.z());
  return hit->albedo * lambert * band;
}

Image render_frame(const CameraIntrinsics& intr, const CameraPose& pose) {
  // Render 2x supersampled through the same pinhole model the pipeline
  // uses, then box-filter down: matched ray geometry, antialiased edges.
  CameraIntrinsics hi{intr.width * 2, intr.height * 2, intr.focal * 2};
  const RayBatch rays = rays_for_pose(hi, pose);
  Image big(hi.height, hi.width, 3);
  for (Eigen::Index i = 0; i < rays.count(); ++i) {
    const Eigen::Vector3d o = rays.origins.row(i).cast<double>();
    const Eigen::Vector3d d = rays.directions.row(i).cast<double>().normalized();
    const Eigen::Vector3d c = shade_ray(o, d);
    const int y = static_cast<int>(i) / hi.width;
    const int x = static_cast<int>(i) % hi.width;
    for (int ch = 0; ch < 3; ++ch) big.at(y, x, ch) = static_cast<float>(c[ch]);
  }
  Image out(intr.height, intr.width, 3);
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        out.at(y, x, ch) = 0.25f * (big.at(2 * y, 2 * x, ch) + big.at(2 * y, 2 * x + 1, ch) +
                                    big.at(2 * y + 1, 2 * x, ch) + big.at(2 * y + 1, 2 * x + 1, ch));
      }
    }
  }
  return clamp01(out);
}

CameraPose spherical_pose(double azimuth_deg, double elevation_deg, double radius) {
  const double az = azimuth_deg * M_PI / 180.0;
  const double el = elevation_deg * M_PI / 180.0;
  const Eigen::Vector3d pos(radius * std::cos(el) * std::cos(az),
                            radius * std::cos(el) * std::sin(az), radius * std::sin(el));
  return look_at_pose(pos, Eigen::Vector3d::Zero());
}

void write_split(const std::string& root, const std::string& split, int count,
                 const SceneGenConfig& cfg, std::mt19937_64& rng) {
  fs::create_directories(fs::path(root) / split);
  const CameraIntrinsics intr{cfg.image_size, cfg.image_size,
                              0.5 * cfg.image_size / std::tan(0.5 * cfg.camera_angle_x)};
  std::uniform_real_distribution<double> jitter(-4.0, 4.0);
  std::uniform_real_distribution<double> elev(18.0, 52.0);

  json doc;
  doc["camera_angle_x"] = cfg.camera_angle_x;
  doc["frames"] = json::array();
  for (int i = 0; i < count; ++i) {
    const double az = 360.0 * i / count + jitter(rng);
    const CameraPose pose = spherical_pose(az, elev(rng), cfg.radius);
    const Image img = render_frame(intr, pose);
    const std::string name = "r_" + std::to_string(i);
    save_image(img, (fs::path(root) / split / (name + ".png")).string());

    json jf;
    jf["file_path"] = "./" + split + "/" + name;
    json jm = json::array();
    for (int r = 0; r < 4; ++r) {
      json row = json::array();
      for (int c = 0; c < 4; ++c) row.push_back(pose.c2w(r, c));
      jm.push_back(row);
    }
    jf["transform_matrix"] = jm;
    doc["frames"].push_back(jf);
  }
  std::ofstream out(fs::path(root) / ("transforms_" + split + ".json"));
  out << doc.dump(2) << "\n";
  if (!out) throw IoError("generate_scene: failed to write transforms");
}

}  // namespace

void generate_scene(const std::string& root, const SceneGenConfig& cfg) {
  if (cfg.image_size < 16) throw ConfigError("generate_scene: image_size too small");
  fs::create_directories(root);
  std::mt19937_64 rng(cfg.seed);
  write_split(root, "train", cfg.n_train, cfg, rng);
  write_split(root, "val", cfg.n_val, cfg, rng);
  write_split(root, "test", cfg.n_test, cfg, rng);
}

Image generate_watermark(int height, int width, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(height, width, 3);

  // Photo-like: smooth low-frequency content only. A dark mean keeps the
  // verification cosine selective (a bright watermark would correlate with
  // any bright garbage through the DC term alone); soft edges keep the
  // extraction target within reach of a small conv stack, like the natural
  // photographs the scheme is meant to carry.
  const double phase = u(rng) * 2 * M_PI;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double fy = static_cast<double>(y) / height;
      const double fx = static_cast<double>(x) / width;
      const double wave = 0.5 + 0.5 * std::sin(2 * M_PI * (fx * 1.1 + fy * 0.6) + phase);
      img.at(y, x, 0) = static_cast<float>(0.05 + 0.18 * wave * fx);
      img.at(y, x, 1) = static_cast<float>(0.05 + 0.16 * wave * (1 - fy));
      img.at(y, x, 2) = static_cast<float>(0.05 + 0.18 * (1 - wave));
    }
  }
  // Soft Gaussian blobs, bright and dark.
  for (int k = 0; k < 5; ++k) {
    const double cy = (0.1 + 0.8 * u(rng)) * height, cx = (0.1 + 0.8 * u(rng)) * width;
    const double sigma = (0.08 + 0.09 * u(rng)) * std::min(height, width);
    double col[3] = {u(rng), u(rng), u(rng)};
    col[k % 3] = 0.9;
    const double gain = (k == 3) ? -0.6 : 0.9;  // one dark well among bright blobs
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double r2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        const double a = gain * std::exp(-r2 / (2 * sigma * sigma));
        for (int c = 0; c < 3; ++c) {
          img.at(y, x, c) = static_cast<float>(img.at(y, x, c) * (1 - std::abs(a)) +
                                               std::max(0.0, a) * col[c]);
        }
      }
    }
  }
  // A soft bright ridge across the frame.
  const double bw = width / 14.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double d = x + y - 0.55 * (width + height) / 2.0;
      const double a = 0.8 * std::exp(-d * d / (2 * bw * bw));
      img.at(y, x, 0) = static_cast<float>(img.at(y, x, 0) * (1 - a) + 0.85 * a);
      img.at(y, x, 1) = static_cast<float>(img.at(y, x, 1) * (1 - a) + 0.82 * a);
      img.at(y, x, 2) = static_cast<float>(img.at(y, x, 2) * (1 - a) + 0.7 * a);
    }
  }
  return clamp01(img);
}

}  // namespace viewmark
