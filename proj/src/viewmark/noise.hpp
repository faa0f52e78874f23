#pragma once

#include <cstdint>
#include <string>

#include "image.hpp"

namespace viewmark {

enum class NoiseKind { none, gaussian, salt_pepper, speckle, poisson };

NoiseKind noise_kind_from_string(const std::string& name);
std::string to_string(NoiseKind kind);

// Training-set corruption simulating attacks on the implicit model.
// Severity defaults are estimates chosen for visual plausibility; every
// acceptance path sweeps them rather than trusting one point.
struct NoiseConfig {
  NoiseKind kind = NoiseKind::none;
  double gaussian_sigma = 0.1;  // std dev; variance 0.01
  double sp_amount = 0.02;      // fraction of pixels hit
  double speckle_sigma = 0.1;
  double poisson_scale = 255.0;  // photon count at full intensity
  uint64_t seed = 0;
  bool apply_to_embedded = false;  // extend noise to watermarked frames too

  // Same config, per-frame seed (seed XOR frame index).
  NoiseConfig for_frame(size_t frame_index) const {
    NoiseConfig c = *this;
    c.seed = seed ^ static_cast<uint64_t>(frame_index);
    return c;
  }
};

void validate(const NoiseConfig& cfg);

// Pure function of (img, cfg): identical inputs and seed give identical
// output. kind=none returns the input bitwise. Output is clamped to [0,1].
Image apply_noise(const Image& img, const NoiseConfig& cfg);

}  // namespace viewmark
