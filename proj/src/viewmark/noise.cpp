#include "noise.hpp"

#include <cmath>
#include <random>

namespace viewmark {

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "none") return NoiseKind::none;
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "salt_pepper") return NoiseKind::salt_pepper;
  if (name == "speckle") return NoiseKind::speckle;
  if (name == "poisson") return NoiseKind::poisson;
  throw ConfigError(strfmt("unknown noise kind '%s'", name.c_str()));
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::salt_pepper: return "salt_pepper";
    case NoiseKind::speckle: return "speckle";
    case NoiseKind::poisson: return "poisson";
  }
  return "?";
}

void validate(const NoiseConfig& cfg) {
  if (!(cfg.gaussian_sigma >= 0) || !(cfg.speckle_sigma >= 0)) {
    throw ConfigError("noise: sigmas must be >= 0");
  }
  if (cfg.sp_amount < 0 || cfg.sp_amount > 1) throw ConfigError("noise: sp_amount must be in [0,1]");
  if (!(cfg.poisson_scale > 0)) throw ConfigError("noise: poisson_scale must be > 0");
}

Image apply_noise(const Image& img, const NoiseConfig& cfg) {
  validate(cfg);
  require_valid_image(img, "apply_noise");
  if (cfg.kind == NoiseKind::none) return img;

  std::mt19937_64 rng(cfg.seed);
  Image out = img;
  auto clamp = [](float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); };

  switch (cfg.kind) {
    case NoiseKind::gaussian: {
      std::normal_distribution<float> n(0.0f, static_cast<float>(cfg.gaussian_sigma));
      for (float& v : out.data) v = clamp(v + n(rng));
      break;
    }
    case NoiseKind::salt_pepper: {
      // Whole-pixel corruption: all channels go to 0 or 1 together.
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
          if (u(rng) >= cfg.sp_amount) continue;
          const float v = u(rng) < 0.5 ? 0.0f : 1.0f;
          for (int c = 0; c < out.channels; ++c) out.at(y, x, c) = v;
        }
      }
      break;
    }
    case NoiseKind::speckle: {
      std::normal_distribution<float> n(0.0f, static_cast<float>(cfg.speckle_sigma));
      for (float& v : out.data) v = clamp(v + v * n(rng));
      break;
    }
    case NoiseKind::poisson: {
      for (float& v : out.data) {
        if (v <= 0.0f) continue;  // Poisson(0) is the point mass at 0
        std::poisson_distribution<long> p(static_cast<double>(v) * cfg.poisson_scale);
        v = clamp(static_cast<float>(p(rng) / cfg.poisson_scale));
      }
      break;
    }
    case NoiseKind::none: break;
  }
  return out;
}

}  // namespace viewmark
