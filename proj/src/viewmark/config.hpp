#pragma once

#include <string>
#include <vector>

#include "metrics.hpp"
#include "nerf.hpp"
#include "noise.hpp"
#include "traincfg.hpp"

namespace viewmark {

// Whole-run configuration, one declarative key=value document with
// sections. Every constant of the training recipe appears here with its
// default, so a config file diff is a full experiment record.
struct RunConfig {
  // [scene]
  std::string scene_root;
  std::string scene_name = "scene";
  int downscale = 1;
  std::string train_split = "train";
  std::string val_split = "val";

  // [watermark]
  std::string watermark_path;

  // [secret] pose source: "<split>:<index>" or "matrix:v0,...,v15" (row major).
  std::string secret_pose = "test:0";

  // [embed] "auto" (frame nearest the secret pose), "all", or "i,j,...".
  std::string embed_indices = "auto";

  // [noise]
  NoiseConfig noise;

  // [joint]
  TrainConfig joint{5000, 1e-4, 50, 0};

  // [nerf]
  TrainConfig nerf{20000, 5e-4, 100, 0};
  SamplingConfig sampling;
  EncodingConfig encoding;
  MlpConfig mlp;
  double t_near = kDefaultTNear;
  double t_far = kDefaultTFar;
  int batch_rays = 1024;
  double lr_decay = 0.1;
  int val_every = 5000;

  // [extract]
  TrainConfig finetune{3000, 1e-4, 50, 0};
  double lambda_neg = 0.0;

  // [attack] reduced-scale retraining per noise kind.
  TrainConfig attack_nerf{4000, 5e-4, 200, 0};
  TrainConfig attack_finetune{1500, 1e-4, 100, 0};
  int attack_batch_rays = 256;

  // [loss]
  LossWeights weights;

  // [run]
  std::string out_dir = "runs/default";
  uint64_t seed = 1;
  double tau = 0.85;
  int threads = 0;  // 0 = library default
};

void validate(const RunConfig& cfg);

// Parses an INI-style document. Unknown keys are configuration errors.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text, const std::string& origin);

// Writes the effective config back out, all keys explicit.
std::string dump_run_config(const RunConfig& cfg);
void save_run_config(const RunConfig& cfg, const std::string& path);

}  // namespace viewmark
