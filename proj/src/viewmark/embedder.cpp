#include "embedder.hpp"

#include <cmath>

#include "extractor.hpp"

namespace viewmark {

namespace {
constexpr uint32_t kEmbedderVersion = 1;

void require_rgb_pair(const Image& host, const Image& wm, const char* what) {
  if (host.channels != 3 || wm.channels != 3) {
    throw ValidationError(strfmt("%s: expected 3-channel images", what));
  }
  if (host.height != wm.height || host.width != wm.width) {
    throw ValidationError(strfmt("%s: host %dx%d vs watermark %dx%d", what, host.height,
                                 host.width, wm.height, wm.width));
  }
}
}  // namespace

EmbedderModel EmbedderModel::init(uint64_t seed) {
  nn::Rng rng(seed);
  EmbedderModel m;
  m.conv_a = nn::Conv3x3(3, 32, rng);
  m.conv_b = nn::Conv3x3(3, 32, rng);
  m.conv_c = nn::Conv3x3(64, 32, rng);
  m.conv_d = nn::Conv3x3(96, 32, rng);
  m.conv_out = nn::Conv3x3(128, 3, rng);
  m.bn_a = nn::BatchNorm(32);
  m.bn_b = nn::BatchNorm(32);
  m.bn_c = nn::BatchNorm(32);
  m.bn_d = nn::BatchNorm(32);
  return m;
}

nn::Feature EmbedderModel::forward(const nn::Feature& host, const nn::Feature& wm, bool train,
                                   Trace* trace, bool ablate_a) const {
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

  block(conv_a, bn_a, {&wm}, tr.xt_a, tr.ctx_a, tr.a);
  if (ablate_a) tr.a.m.setZero();
  block(conv_b, bn_b, {&host}, tr.xt_b, tr.ctx_b, tr.b);
  block(conv_c, bn_c, {&tr.a, &tr.b}, tr.xt_c, tr.ctx_c, tr.c);
  block(conv_d, bn_d, {&tr.a, &tr.b, &tr.c}, tr.xt_d, tr.ctx_d, tr.d);

  nn::Feature out;
  conv_out.forward({&tr.a, &tr.b, &tr.c, &tr.d}, out, train ? &tr.xt_out : nullptr);
  return out;
}

void EmbedderModel::backward(const Trace& tr, const nn::Feature& d_out) {
  nn::Feature ga(tr.a.h, tr.a.w, 32), gb(tr.a.h, tr.a.w, 32), gc(tr.a.h, tr.a.w, 32),
      gd(tr.a.h, tr.a.w, 32);
  std::vector<nn::Feature*> sink_abcd{&ga, &gb, &gc, &gd};
  conv_out.backward(d_out, tr.xt_out, &sink_abcd);

  nn::Feature tmp;
  // D block: consumers already drained, propagate into A,B,C.
  nn::relu_backward_inplace(tr.d.m, gd.m);
  bn_d.backward(gd, tr.ctx_d, tmp);
  std::vector<nn::Feature*> sink_abc{&ga, &gb, &gc};
  conv_d.backward(tmp, tr.xt_d, &sink_abc);

  nn::relu_backward_inplace(tr.c.m, gc.m);
  bn_c.backward(gc, tr.ctx_c, tmp);
  std::vector<nn::Feature*> sink_ab{&ga, &gb};
  conv_c.backward(tmp, tr.xt_c, &sink_ab);

  nn::relu_backward_inplace(tr.b.m, gb.m);
  bn_b.backward(gb, tr.ctx_b, tmp);
  conv_b.backward(tmp, tr.xt_b, nullptr);

  nn::relu_backward_inplace(tr.a.m, ga.m);
  bn_a.backward(ga, tr.ctx_a, tmp);
  conv_a.backward(tmp, tr.xt_a, nullptr);
}

void EmbedderModel::zero_grad() {
  conv_a.zero_grad();
  conv_b.zero_grad();
  conv_c.zero_grad();
  conv_d.zero_grad();
  conv_out.zero_grad();
  bn_a.zero_grad();
  bn_b.zero_grad();
  bn_c.zero_grad();
  bn_d.zero_grad();
}

void EmbedderModel::register_params(nn::Adam& opt) {
  for (nn::Conv3x3* c : {&conv_a, &conv_b, &conv_c, &conv_d, &conv_out}) {
    opt.add(c->w, c->gw);
    opt.add(c->b, c->gb);
  }
  for (nn::BatchNorm* bn : {&bn_a, &bn_b, &bn_c, &bn_d}) {
    opt.add(bn->gamma, bn->g_gamma);
    opt.add(bn->beta, bn->g_beta);
  }
}

void EmbedderModel::save(const std::string& path) const {
  BinWriter wtr(path, "embedder", kEmbedderVersion);
  for (const nn::Conv3x3* c : {&conv_a, &conv_b, &conv_c, &conv_d, &conv_out}) {
    c->serialize(wtr);
  }
  for (const nn::BatchNorm* bn : {&bn_a, &bn_b, &bn_c, &bn_d}) bn->serialize(wtr);
  wtr.close();
}

EmbedderModel EmbedderModel::load(const std::string& path) {
  BinReader rdr(path, "embedder", kEmbedderVersion);
  EmbedderModel m;
  for (nn::Conv3x3* c : {&m.conv_a, &m.conv_b, &m.conv_c, &m.conv_d, &m.conv_out}) {
    c->deserialize(rdr);
  }
  for (nn::BatchNorm* bn : {&m.bn_a, &m.bn_b, &m.bn_c, &m.bn_d}) bn->deserialize(rdr);
  return m;
}

Image embed(const EmbedderModel& model, const Image& host, const Image& watermark) {
  require_rgb_pair(host, watermark, "embed");
  nn::Feature out =
      model.forward(nn::from_image(host), nn::from_image(watermark), /*train=*/false, nullptr);
  return clamp01(nn::to_image(out));
}

void train_joint(const std::vector<Image>& hosts, const Image& watermark, const TrainConfig& cfg,
                 const LossWeights& wts, EmbedderModel& embedder, ExtractorModel& extractor,
                 std::vector<JointCurveRow>& curve) {
  if (hosts.empty()) throw ConfigError("train_joint: need at least one host image");
  if (cfg.steps < 1) throw ConfigError("train_joint: cfg.steps must be >= 1");
  for (const Image& h : hosts) require_rgb_pair(h, watermark, "train_joint");

  nn::Adam opt;
  embedder.register_params(opt);
  extractor.register_params(opt);

  const nn::Feature wm_feat = nn::from_image(watermark);
  std::vector<nn::Feature> host_feats;
  for (const Image& h : hosts) host_feats.push_back(nn::from_image(h));

  EmbedderModel::Trace etr;
  ExtractorModel::Trace xtr;
  Image ld_grad;
  for (int step = 0; step < cfg.steps; ++step) {
    const size_t hi = static_cast<size_t>(step) % hosts.size();
    embedder.zero_grad();
    extractor.zero_grad();

    nn::Feature kp = embedder.forward(host_feats[hi], wm_feat, /*train=*/true, &etr);
    nn::Feature wp = extractor.forward(kp, /*train=*/true, &xtr);

    const Image kp_img = nn::to_image(kp);
    const Image wp_img = nn::to_image(wp);

    Image le_grad;
    const double le = wts.alpha * mse_grad(hosts[hi], kp_img, le_grad);
    const double ld = loss_ld_grad(watermark, wp_img, wts, ld_grad);
    if (!std::isfinite(le) || !std::isfinite(ld)) {
      throw TrainingError(strfmt("train_joint: loss diverged at step %d", step));
    }

    nn::Feature d_kp(kp.h, kp.w, 3);
    extractor.backward(xtr, nn::from_image(ld_grad), &d_kp);
    const nn::Feature le_grad_feat = nn::from_image(le_grad);
    d_kp.m += static_cast<float>(wts.alpha) * le_grad_feat.m;
    embedder.backward(etr, d_kp);

    opt.step(static_cast<float>(cfg.lr));

    if (step % cfg.log_every == 0 || step == cfg.steps - 1) {
      curve.push_back({step, le, ld, psnr(hosts[hi], clamp01(kp_img))});
    }
  }
}

}  // namespace viewmark
