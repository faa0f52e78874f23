#pragma once

#include <string>
#include <vector>

#include "metrics.hpp"
#include "nn.hpp"
#include "traincfg.hpp"

namespace viewmark {

// Watermark embedding network: five 3x3 convolutions with dense
// connections, channel plan 3->32 (watermark), 3->32 (host), 64->32,
// 96->32, 128->3. Hidden stages are BN + ReLU; the output stage is linear
// and the public API clamps it (a rectified output could not cover [0,1]).
struct EmbedderModel {
  nn::Conv3x3 conv_a, conv_b, conv_c, conv_d, conv_out;
  nn::BatchNorm bn_a, bn_b, bn_c, bn_d;

  struct Trace {
    Eigen::MatrixXf xt_a, xt_b, xt_c, xt_d, xt_out;
    nn::BatchNorm::Ctx ctx_a, ctx_b, ctx_c, ctx_d;
    nn::Feature a, b, c, d;  // post-activation maps
  };

  static EmbedderModel init(uint64_t seed);

  // Raw (unclamped) watermarked image. train=true uses batch statistics and
  // fills `trace` for backward. ablate_a zeroes the first feature map; only
  // the dense-connectivity test uses it.
  nn::Feature forward(const nn::Feature& host, const nn::Feature& wm, bool train, Trace* trace,
                      bool ablate_a = false) const;

  // Accumulates parameter gradients from d(loss)/d(output).
  void backward(const Trace& trace, const nn::Feature& d_out);

  void zero_grad();
  void register_params(nn::Adam& opt);
  void save(const std::string& path) const;
  static EmbedderModel load(const std::string& path);
};

// Inference-mode embedding, output clamped to [0,1].
Image embed(const EmbedderModel& model, const Image& host, const Image& watermark);

struct ExtractorModel;

struct JointCurveRow {
  int step = 0;
  double le = 0, ld = 0, psnr_db = 0;
};

// Joint pre-training of embedder and extractor on (host, watermark) pairs:
// minimizes loss_le(k,k') + loss_ld(w, extract(k')). Hosts are visited
// round-robin, one image per step. Throws TrainingError on divergence.
void train_joint(const std::vector<Image>& hosts, const Image& watermark, const TrainConfig& cfg,
                 const LossWeights& wts, EmbedderModel& embedder, ExtractorModel& extractor,
                 std::vector<JointCurveRow>& curve);

}  // namespace viewmark
