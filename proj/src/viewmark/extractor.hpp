#pragma once

#include <string>
#include <vector>

#include "metrics.hpp"
#include "nn.hpp"
#include "traincfg.hpp"

namespace viewmark {

// Watermark extraction network: four 3x3 convolutions with dense
// connections, channel plan 3->32, 32->32, 64->32, 96->3. Deliberately
// overparameterized relative to its one-image fine-tuning task; that
// overfitting is what ties extraction to the secret view.
struct ExtractorModel {
  nn::Conv3x3 conv_e, conv_f, conv_g, conv_out;
  nn::BatchNorm bn_e, bn_f, bn_g;

  struct Trace {
    Eigen::MatrixXf xt_e, xt_f, xt_g, xt_out;
    nn::BatchNorm::Ctx ctx_e, ctx_f, ctx_g;
    nn::Feature e, f, g;
  };

  static ExtractorModel init(uint64_t seed);

  nn::Feature forward(const nn::Feature& s, bool train, Trace* trace) const;

  // Accumulates parameter gradients; when d_input is non-null it receives
  // d(loss)/d(s), which the joint trainer chains into the embedder.
  void backward(const Trace& trace, const nn::Feature& d_out, nn::Feature* d_input);

  void zero_grad();
  void register_params(nn::Adam& opt);
  void save(const std::string& path) const;
  static ExtractorModel load(const std::string& path);
};

// Inference-mode extraction, output clamped to [0,1].
Image extract(const ExtractorModel& model, const Image& view);

struct FinetuneCurveRow {
  int step = 0;
  double ld = 0, nc = 0;
};

// Overfits the extractor to the single (secret render, watermark) pair by
// minimizing loss_ld. Optional negatives add lambda_neg * mse(extract(neg),
// mid-gray); the default lambda_neg = 0 keeps the pure-overfitting scheme.
void finetune_extractor(ExtractorModel& model, const Image& secret_render, const Image& watermark,
                        const std::vector<Image>& negatives, const TrainConfig& cfg,
                        const LossWeights& wts, double lambda_neg,
                        std::vector<FinetuneCurveRow>& curve);

}  // namespace viewmark
