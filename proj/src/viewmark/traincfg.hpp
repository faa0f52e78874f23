#pragma once

#include <cstdint>

namespace viewmark {

// Per-stage optimizer settings. The Adam learning rate default matches the
// embedder/extractor setup; the NeRF stage overrides it in RunConfig.
struct TrainConfig {
  int steps = 5000;
  double lr = 1e-4;
  int log_every = 50;
  uint64_t seed = 1;
};

}  // namespace viewmark
