#include "extractor.hpp"

#include <cmath>

namespace viewmark {

namespace {
constexpr uint32_t kExtractorVersion = 1;
}

ExtractorModel ExtractorModel::init(uint64_t seed) {
  nn::Rng rng(seed);
  ExtractorModel m;
  m.conv_e = nn::Conv3x3(3, 32, rng);
  m.conv_f = nn::Conv3x3(32, 32, rng);
  m.conv_g = nn::Conv3x3(64, 32, rng);
  m.conv_out = nn::Conv3x3(96, 3, rng);
  m.bn_e = nn::BatchNorm(32);
  m.bn_f = nn::BatchNorm(32);
  m.bn_g = nn::BatchNorm(32);
  return m;
}

nn::Feature ExtractorModel::forward(const nn::Feature& s, bool train, Trace* trace) const {
  if (s.channels() != 3) throw ValidationError("extract: expected a 3-channel view");
  Trace local;
  Trace& tr = trace ? *trace : local;

  auto block = [&](const nn::Conv3x3& conv, const nn::BatchNorm& bn,
                   const std::vector<const nn::Feature*>& xs, Eigen::MatrixXf& xt,
                   nn::BatchNorm::Ctx& ctx, nn::Feature& out) {
    nn::Feature pre;
    conv.forward(xs, pre, train ? &xt : nullptr);
    if (train) {
      // Train mode mutates BN running statistics.
      const_cast<nn::BatchNorm&>(bn).forward_train(pre, out, ctx);
    } else {
      bn.forward_eval(pre, out);
    }
    nn::relu_inplace(out.m);
  };

  block(conv_e, bn_e, {&s}, tr.xt_e, tr.ctx_e, tr.e);
  block(conv_f, bn_f, {&tr.e}, tr.xt_f, tr.ctx_f, tr.f);
  block(conv_g, bn_g, {&tr.e, &tr.f}, tr.xt_g, tr.ctx_g, tr.g);

  nn::Feature out;
  conv_out.forward({&tr.e, &tr.f, &tr.g}, out, train ? &tr.xt_out : nullptr);
  return out;
}

void ExtractorModel::backward(const Trace& tr, const nn::Feature& d_out, nn::Feature* d_input) {
  nn::Feature ge(tr.e.h, tr.e.w, 32), gf(tr.e.h, tr.e.w, 32), gg(tr.e.h, tr.e.w, 32);
  std::vector<nn::Feature*> sink_efg{&ge, &gf, &gg};
  conv_out.backward(d_out, tr.xt_out, &sink_efg);

  nn::Feature tmp;
  nn::relu_backward_inplace(tr.g.m, gg.m);
  bn_g.backward(gg, tr.ctx_g, tmp);
  std::vector<nn::Feature*> sink_ef{&ge, &gf};
  conv_g.backward(tmp, tr.xt_g, &sink_ef);

  nn::relu_backward_inplace(tr.f.m, gf.m);
  bn_f.backward(gf, tr.ctx_f, tmp);
  std::vector<nn::Feature*> sink_e{&ge};
  conv_f.backward(tmp, tr.xt_f, &sink_e);

  nn::relu_backward_inplace(tr.e.m, ge.m);
  bn_e.backward(ge, tr.ctx_e, tmp);
  if (d_input) {
    std::vector<nn::Feature*> sink_in{d_input};
    conv_e.backward(tmp, tr.xt_e, &sink_in);
  } else {
    conv_e.backward(tmp, tr.xt_e, nullptr);
  }
}

void ExtractorModel::zero_grad() {
  conv_e.zero_grad();
  conv_f.zero_grad();
  conv_g.zero_grad();
  conv_out.zero_grad();
  bn_e.zero_grad();
  bn_f.zero_grad();
  bn_g.zero_grad();
}

void ExtractorModel::register_params(nn::Adam& opt) {
  for (nn::Conv3x3* c : {&conv_e, &conv_f, &conv_g, &conv_out}) {
    opt.add(c->w, c->gw);
    opt.add(c->b, c->gb);
  }
  for (nn::BatchNorm* bn : {&bn_e, &bn_f, &bn_g}) {
    opt.add(bn->gamma, bn->g_gamma);
    opt.add(bn->beta, bn->g_beta);
  }
}

void ExtractorModel::save(const std::string& path) const {
  BinWriter wtr(path, "extractor", kExtractorVersion);
  for (const nn::Conv3x3* c : {&conv_e, &conv_f, &conv_g, &conv_out}) c->serialize(wtr);
  for (const nn::BatchNorm* bn : {&bn_e, &bn_f, &bn_g}) bn->serialize(wtr);
  wtr.close();
}

ExtractorModel ExtractorModel::load(const std::string& path) {
  BinReader rdr(path, "extractor", kExtractorVersion);
  ExtractorModel m;
  for (nn::Conv3x3* c : {&m.conv_e, &m.conv_f, &m.conv_g, &m.conv_out}) c->deserialize(rdr);
  for (nn::BatchNorm* bn : {&m.bn_e, &m.bn_f, &m.bn_g}) bn->deserialize(rdr);
  return m;
}

Image extract(const ExtractorModel& model, const Image& view) {
  if (view.channels != 3) throw ValidationError("extract: expected a 3-channel view");
  nn::Feature out = model.forward(nn::from_image(view), /*train=*/false, nullptr);
  return clamp01(nn::to_image(out));
}

void finetune_extractor(ExtractorModel& model, const Image& secret_render, const Image& watermark,
                        const std::vector<Image>& negatives, const TrainConfig& cfg,
                        const LossWeights& wts, double lambda_neg,
                        std::vector<FinetuneCurveRow>& curve) {
  if (cfg.steps < 1) throw ConfigError("finetune_extractor: cfg.steps must be >= 1");
  if (secret_render.channels != 3 || !secret_render.same_shape(watermark)) {
    throw ValidationError("finetune_extractor: render/watermark shape mismatch");
  }

  nn::Adam opt;
  model.register_params(opt);

  const nn::Feature s_feat = nn::from_image(secret_render);
  std::vector<nn::Feature> neg_feats;
  for (const Image& n : negatives) neg_feats.push_back(nn::from_image(n));
  const Image gray(watermark.height, watermark.width, 3, 0.5f);

  ExtractorModel::Trace tr;
  Image ld_grad, neg_grad;
  for (int step = 0; step < cfg.steps; ++step) {
    model.zero_grad();
    nn::Feature wp = model.forward(s_feat, /*train=*/true, &tr);
    const Image wp_img = nn::to_image(wp);
    const double ld = loss_ld_grad(watermark, wp_img, wts, ld_grad);
    if (!std::isfinite(ld)) {
      throw TrainingError(strfmt("finetune_extractor: loss diverged at step %d", step));
    }
    model.backward(tr, nn::from_image(ld_grad), nullptr);

    if (lambda_neg > 0 && !neg_feats.empty()) {
      // Repulsion: push non-secret views toward mid-gray.
      const size_t ni = static_cast<size_t>(step) % neg_feats.size();
      nn::Feature np = model.forward(neg_feats[ni], /*train=*/true, &tr);
      mse_grad(gray, nn::to_image(np), neg_grad);
      nn::Feature ng = nn::from_image(neg_grad);
      ng.m *= static_cast<float>(lambda_neg);
      model.backward(tr, ng, nullptr);
    }

    opt.step(static_cast<float>(cfg.lr));

    if (step % cfg.log_every == 0 || step == cfg.steps - 1) {
      curve.push_back({step, ld, nc(watermark, clamp01(wp_img))});
    }
  }
}

}  // namespace viewmark
