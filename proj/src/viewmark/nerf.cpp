#include "nerf.hpp"

#include <algorithm>
#include <cmath>

namespace viewmark {

namespace {
constexpr uint32_t kFieldVersion = 1;
constexpr float kSigmaBiasInit = -0.1f;
}  // namespace

void validate(const SamplingConfig& scfg) {
  if (scfg.n_coarse < 2) throw ConfigError("sampling: n_coarse must be >= 2");
  if (scfg.n_fine < 0) throw ConfigError("sampling: n_fine must be >= 0");
}

Eigen::VectorXf positional_encode(const Eigen::Vector3f& v, int octaves, bool include_input) {
  if (!v.allFinite()) throw ValidationError("positional_encode: non-finite input");
  if (octaves < 0) throw ValidationError("positional_encode: octaves must be >= 0");
  Eigen::MatrixX3f m(1, 3);
  m.row(0) = v.transpose();
  Eigen::MatrixXf out;
  encode_batch(m, octaves, include_input, out);
  return out.row(0).transpose();
}

void encode_batch(const Eigen::MatrixX3f& v, int octaves, bool include_input,
                  Eigen::MatrixXf& out) {
  const Eigen::Index n = v.rows();
  const int width = 3 * ((include_input ? 1 : 0) + 2 * octaves);
  out.resize(n, width);
  int col = 0;
  if (include_input) {
    out.leftCols<3>() = v;
    col = 3;
  }
  float freq = static_cast<float>(M_PI);
  for (int j = 0; j < octaves; ++j) {
    out.middleCols(col, 3) = (v.array() * freq).sin();
    out.middleCols(col + 3, 3) = (v.array() * freq).cos();
    col += 6;
    freq *= 2.0f;
  }
}

NerfMlp NerfMlp::init(const MlpConfig& cfg, const EncodingConfig& enc, nn::Rng& rng) {
  if (cfg.depth < 2 || cfg.width < 4) throw ConfigError("nerf mlp: degenerate dimensions");
  if (cfg.skip_layer < 2 || cfg.skip_layer > cfg.depth) {
    throw ConfigError("nerf mlp: skip_layer out of range");
  }
  NerfMlp m;
  m.cfg = cfg;
  const int pos_dim = enc.pos_dim();
  for (int i = 0; i < cfg.depth; ++i) {
    int in = (i == 0) ? pos_dim : cfg.width;
    if (i == cfg.skip_layer - 1) in = cfg.width + pos_dim;
    m.trunk.emplace_back(in, cfg.width, rng);
  }
  m.sigma_head = nn::Linear(cfg.width, 1, rng);
  m.sigma_head.b[0] = kSigmaBiasInit;  // fresh fields start near-empty
  m.feature = nn::Linear(cfg.width, cfg.width, rng);
  m.color_hidden = nn::Linear(cfg.width + enc.dir_dim(), cfg.color_width, rng);
  m.color_out = nn::Linear(cfg.color_width, 3, rng);
  return m;
}

void NerfMlp::forward(const Eigen::MatrixXf& x_enc, const Eigen::MatrixXf& d_enc, Ws& ws) const {
  const int depth = cfg.depth;
  ws.h.resize(depth);
  for (int i = 0; i < depth; ++i) {
    const Eigen::MatrixXf* in = (i == 0) ? &x_enc : &ws.h[i - 1];
    if (i == cfg.skip_layer - 1) {
      ws.skip_in.resize(x_enc.rows(), ws.h[i - 1].cols() + x_enc.cols());
      ws.skip_in << ws.h[i - 1], x_enc;
      in = &ws.skip_in;
    }
    trunk[i].forward(*in, ws.h[i]);
    nn::relu_inplace(ws.h[i]);
  }
  Eigen::MatrixXf sig;
  sigma_head.forward(ws.h[depth - 1], sig);
  ws.sigma_raw = sig.col(0);
  feature.forward(ws.h[depth - 1], ws.feat);

  ws.color_in.resize(x_enc.rows(), ws.feat.cols() + d_enc.cols());
  ws.color_in << ws.feat, d_enc;
  color_hidden.forward(ws.color_in, ws.color_h);
  nn::relu_inplace(ws.color_h);
  color_out.forward(ws.color_h, ws.rgb);
  ws.rgb = 1.0f / (1.0f + (-ws.rgb).array().exp());
}

void NerfMlp::backward(const Eigen::MatrixXf& x_enc, const Ws& ws,
                       const Eigen::VectorXf& d_sigma_raw, const Eigen::MatrixXf& d_rgb) {
  const int depth = cfg.depth;
  // Sigmoid chain, then the color branch.
  Eigen::MatrixXf d_pre = (d_rgb.array() * ws.rgb.array() * (1.0f - ws.rgb.array())).matrix();
  Eigen::MatrixXf d_color_h;
  color_out.backward(ws.color_h, d_pre, &d_color_h);
  nn::relu_backward_inplace(ws.color_h, d_color_h);
  Eigen::MatrixXf d_color_in;
  color_hidden.backward(ws.color_in, d_color_h, &d_color_in);

  Eigen::MatrixXf d_last;
  feature.backward(ws.h[depth - 1], d_color_in.leftCols(ws.feat.cols()), &d_last);
  Eigen::MatrixXf d_sig_in;
  sigma_head.backward(ws.h[depth - 1], d_sigma_raw, &d_sig_in);  // M x 1 column
  d_last += d_sig_in;

  for (int i = depth - 1; i >= 0; --i) {
    nn::relu_backward_inplace(ws.h[i], d_last);
    const Eigen::MatrixXf* in = (i == 0) ? &x_enc : &ws.h[i - 1];
    if (i == cfg.skip_layer - 1) in = &ws.skip_in;
    if (i == 0) {
      trunk[0].backward(*in, d_last, nullptr);
    } else {
      Eigen::MatrixXf d_in;
      trunk[i].backward(*in, d_last, &d_in);
      d_last = (i == cfg.skip_layer - 1) ? d_in.leftCols(cfg.width).eval() : std::move(d_in);
    }
  }
}

void NerfMlp::zero_grad() {
  for (nn::Linear& l : trunk) l.zero_grad();
  sigma_head.zero_grad();
  feature.zero_grad();
  color_hidden.zero_grad();
  color_out.zero_grad();
}

void NerfMlp::register_params(nn::Adam& opt) {
  for (nn::Linear& l : trunk) {
    opt.add(l.w, l.gw);
    opt.add(l.b, l.gb);
  }
  for (nn::Linear* l : {&sigma_head, &feature, &color_hidden, &color_out}) {
    opt.add(l->w, l->gw);
    opt.add(l->b, l->gb);
  }
}

void NerfMlp::serialize(BinWriter& wtr) const {
  wtr.write_i32(cfg.depth);
  wtr.write_i32(cfg.width);
  wtr.write_i32(cfg.skip_layer);
  wtr.write_i32(cfg.color_width);
  for (const nn::Linear& l : trunk) l.serialize(wtr);
  for (const nn::Linear* l : {&sigma_head, &feature, &color_hidden, &color_out}) {
    l->serialize(wtr);
  }
}

void NerfMlp::deserialize(BinReader& rdr) {
  cfg.depth = rdr.read_i32();
  cfg.width = rdr.read_i32();
  cfg.skip_layer = rdr.read_i32();
  cfg.color_width = rdr.read_i32();
  trunk.assign(cfg.depth, nn::Linear());
  for (nn::Linear& l : trunk) l.deserialize(rdr);
  for (nn::Linear* l : {&sigma_head, &feature, &color_hidden, &color_out}) {
    l->deserialize(rdr);
  }
}

RadianceField RadianceField::init(const EncodingConfig& enc, const MlpConfig& mlp,
                                  const SamplingConfig& sampling, double t_near, double t_far,
                                  uint64_t seed) {
  validate(sampling);
  RadianceField f;
  f.enc = enc;
  f.mlp = mlp;
  f.sampling = sampling;
  f.t_near = t_near;
  f.t_far = t_far;
  nn::Rng rng(seed);
  f.coarse = NerfMlp::init(mlp, enc, rng);
  f.fine = NerfMlp::init(mlp, enc, rng);
  return f;
}

void RadianceField::save(const std::string& path) const {
  BinWriter wtr(path, "field", kFieldVersion);
  wtr.write_i32(enc.l_pos);
  wtr.write_i32(enc.l_dir);
  wtr.write_i32(enc.include_input ? 1 : 0);
  wtr.write_i32(sampling.n_coarse);
  wtr.write_i32(sampling.n_fine);
  wtr.write_i32(sampling.perturb ? 1 : 0);
  wtr.write_i32(sampling.white_background ? 1 : 0);
  wtr.write_f64(t_near);
  wtr.write_f64(t_far);
  coarse.serialize(wtr);
  fine.serialize(wtr);
  wtr.close();
}

RadianceField RadianceField::load(const std::string& path) {
  BinReader rdr(path, "field", kFieldVersion);
  RadianceField f;
  f.enc.l_pos = rdr.read_i32();
  f.enc.l_dir = rdr.read_i32();
  f.enc.include_input = rdr.read_i32() != 0;
  f.sampling.n_coarse = rdr.read_i32();
  f.sampling.n_fine = rdr.read_i32();
  f.sampling.perturb = rdr.read_i32() != 0;
  f.sampling.white_background = rdr.read_i32() != 0;
  f.t_near = rdr.read_f64();
  f.t_far = rdr.read_f64();
  f.coarse.deserialize(rdr);
  f.fine.deserialize(rdr);
  f.mlp = f.coarse.cfg;
  return f;
}

RowMat deltas_from_ts(const RowMat& ts, float t_far) {
  RowMat deltas(ts.rows(), ts.cols());
  const int s = static_cast<int>(ts.cols());
  deltas.leftCols(s - 1) = ts.rightCols(s - 1) - ts.leftCols(s - 1);
  // Close the quadrature at t_far; leftover transmittance is the
  // background's share.
  deltas.col(s - 1) = (t_far - ts.col(s - 1).array()).max(0.0f);
  return deltas;
}

void composite_forward(const Eigen::VectorXf& sigma, const Eigen::MatrixX3f& rgb,
                       const RowMat& deltas, bool white_background, Eigen::MatrixX3f& color,
                       CompositeCtx& ctx) {
  const int n = static_cast<int>(deltas.rows());
  const int s = static_cast<int>(deltas.cols());
  ctx.n_rays = n;
  ctx.n_samples = s;
  ctx.alpha.resize(n, s);
  ctx.trans.resize(n, s);
  ctx.weights.resize(n, s);
  ctx.sigma = sigma;
  ctx.rgb = rgb;
  ctx.deltas = deltas;
  ctx.white_background = white_background;
  color.resize(n, 3);

#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) {
    float t_acc = 1.0f;
    Eigen::RowVector3f c = Eigen::RowVector3f::Zero();
    const Eigen::Index base = static_cast<Eigen::Index>(r) * s;
    for (int i = 0; i < s; ++i) {
      const float a = 1.0f - std::exp(-sigma[base + i] * deltas(r, i));
      ctx.alpha(r, i) = a;
      ctx.trans(r, i) = t_acc;
      const float w = t_acc * a;
      ctx.weights(r, i) = w;
      c += w * rgb.row(base + i);
      t_acc *= (1.0f - a);
    }
    if (white_background) c.array() += t_acc;
    color.row(r) = c;
  }
}

void composite_backward(const CompositeCtx& ctx, const Eigen::MatrixX3f& d_color,
                        Eigen::VectorXf& d_sigma, Eigen::MatrixX3f& d_rgb) {
  const int n = ctx.n_rays, s = ctx.n_samples;
  d_sigma.resize(static_cast<Eigen::Index>(n) * s);
  d_rgb.resize(static_cast<Eigen::Index>(n) * s, 3);

#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) {
    const Eigen::Index base = static_cast<Eigen::Index>(r) * s;
    const Eigen::RowVector3f dc = d_color.row(r);
    // T after the last sample: survivors hit the background.
    const float t_final = ctx.trans(r, s - 1) * (1.0f - ctx.alpha(r, s - 1));
    const float bg_dot = ctx.white_background ? dc.sum() : 0.0f;
    // suffix = sum_{k>i} g_k w_k + bg_dot * T_final, accumulated downward.
    float suffix = bg_dot * t_final;
    for (int i = s - 1; i >= 0; --i) {
      const float g = dc.dot(ctx.rgb.row(base + i));
      const float t_next = ctx.trans(r, i) * (1.0f - ctx.alpha(r, i));
      const float ds = g * t_next - suffix;  // d/d(sigma_i * delta_i)
      d_sigma[base + i] = ds * ctx.deltas(r, i);
      d_rgb.row(base + i) = ctx.weights(r, i) * dc;
      suffix += g * ctx.weights(r, i);
    }
  }
}

RowMat sample_coarse_ts(int n_rays, int n_samples, float t_near, float t_far, bool perturb,
                        nn::Rng& rng) {
  RowMat ts(n_rays, n_samples);
  const float span = (t_far - t_near) / static_cast<float>(n_samples);
  if (!perturb) {
    for (int i = 0; i < n_samples; ++i) {
      const float v = t_near + span * (i + 0.5f);
      ts.col(i).setConstant(v);
    }
    return ts;
  }
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int r = 0; r < n_rays; ++r) {
    for (int i = 0; i < n_samples; ++i) ts(r, i) = t_near + span * (i + u(rng));
  }
  return ts;
}

RowMat importance_resample(const RowMat& coarse_ts, const RowMat& coarse_weights, int n_fine,
                           bool perturb, nn::Rng& rng) {
  const int n = static_cast<int>(coarse_ts.rows());
  const int sc = static_cast<int>(coarse_ts.cols());
  const int bins = sc - 1;
  RowMat out(n, sc + n_fine);
  if (n_fine == 0) {
    out = coarse_ts;
    return out;
  }

  std::uniform_real_distribution<float> udist(0.0f, 1.0f);
  std::vector<float> cdf(bins + 1);
  std::vector<float> fine(n_fine);
  for (int r = 0; r < n; ++r) {
    // Per-interval pdf from the coarse weights (the sentinel interval is
    // unbounded, so its weight is dropped).
    cdf[0] = 0.0f;
    for (int i = 0; i < bins; ++i) {
      cdf[i + 1] = cdf[i] + coarse_weights(r, i) + 1e-5f;
    }
    const float total = cdf[bins];
    for (int k = 0; k < n_fine; ++k) {
      const float jitter = perturb ? udist(rng) : 0.5f;
      const float u = (k + jitter) / static_cast<float>(n_fine) * total;
      // Invert the piecewise-linear CDF.
      int lo = 0, hi = bins;
      while (lo + 1 < hi) {
        const int mid = (lo + hi) / 2;
        if (cdf[mid] <= u) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const float seg = cdf[lo + 1] - cdf[lo];
      const float frac = seg > 0 ? (u - cdf[lo]) / seg : 0.5f;
      fine[k] = coarse_ts(r, lo) + frac * (coarse_ts(r, lo + 1) - coarse_ts(r, lo));
    }
    // Merge (both lists are sorted).
    int a = 0, b = 0, o = 0;
    while (a < sc || b < n_fine) {
      if (b >= n_fine || (a < sc && coarse_ts(r, a) <= fine[b])) {
        out(r, o++) = coarse_ts(r, a++);
      } else {
        out(r, o++) = fine[b++];
      }
    }
  }
  return out;
}

FieldFn field_fn(const NerfMlp& mlp, const EncodingConfig& enc) {
  return [&mlp, &enc](const Eigen::MatrixX3f& pts, const Eigen::MatrixX3f& dirs,
                      Eigen::VectorXf& sigma, Eigen::MatrixX3f& rgb) {
    Eigen::MatrixXf x_enc, d_enc;
    encode_batch(pts, enc.l_pos, enc.include_input, x_enc);
    encode_batch(dirs, enc.l_dir, enc.include_input, d_enc);
    NerfMlp::Ws ws;
    mlp.forward(x_enc, d_enc, ws);
    sigma = ws.sigma_raw.cwiseMax(0.0f);
    rgb = ws.rgb;
  };
}

void expand_ray_samples(const RayBatch& rays, const RowMat& ts, Eigen::MatrixX3f& pts,
                        Eigen::MatrixX3f& dirs) {
  const int s = static_cast<int>(ts.cols());
  const Eigen::Index m = static_cast<Eigen::Index>(ts.rows()) * s;
  pts.resize(m, 3);
  dirs.resize(m, 3);
  for (int r = 0; r < static_cast<int>(ts.rows()); ++r) {
    const Eigen::RowVector3f o = rays.origins.row(r);
    const Eigen::RowVector3f d = rays.directions.row(r);
    for (int i = 0; i < s; ++i) {
      pts.row(static_cast<Eigen::Index>(r) * s + i) = o + ts(r, i) * d;
      dirs.row(static_cast<Eigen::Index>(r) * s + i) = d;
    }
  }
}

namespace {

void require_finite_field(const Eigen::VectorXf& sigma, const Eigen::MatrixX3f& rgb,
                          int n_samples) {
  if (sigma.allFinite() && rgb.allFinite()) return;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (!std::isfinite(sigma[i]) || !rgb.row(i).allFinite()) {
      throw NumericError(strfmt("render: non-finite field output on ray %lld",
                                static_cast<long long>(i / n_samples)));
    }
  }
}

}  // namespace

RenderResult render_rays(const FieldFn& coarse_field, const FieldFn& fine_field,
                         const RayBatch& rays, const SamplingConfig& scfg, nn::Rng* perturb_rng) {
  validate(scfg);
  const int n = static_cast<int>(rays.count());
  const bool perturb = scfg.perturb && perturb_rng != nullptr;
  nn::Rng fallback(0);
  nn::Rng& rng = perturb_rng ? *perturb_rng : fallback;

  RowMat ts = sample_coarse_ts(n, scfg.n_coarse, rays.t_near, rays.t_far, perturb, rng);
  Eigen::MatrixX3f pts, dirs;
  expand_ray_samples(rays, ts, pts, dirs);
  Eigen::VectorXf sigma;
  Eigen::MatrixX3f rgb;
  coarse_field(pts, dirs, sigma, rgb);
  require_finite_field(sigma, rgb, scfg.n_coarse);

  RenderResult res;
  CompositeCtx cctx;
  composite_forward(sigma, rgb, deltas_from_ts(ts, rays.t_far), scfg.white_background,
                    res.coarse_rgb, cctx);

  RowMat union_ts = importance_resample(ts, cctx.weights, scfg.n_fine, perturb, rng);
  expand_ray_samples(rays, union_ts, pts, dirs);
  fine_field(pts, dirs, sigma, rgb);
  require_finite_field(sigma, rgb, static_cast<int>(union_ts.cols()));

  CompositeCtx fctx;
  composite_forward(sigma, rgb, deltas_from_ts(union_ts, rays.t_far), scfg.white_background,
                    res.fine_rgb, fctx);
  res.weights = std::move(fctx.weights);
  return res;
}

RenderResult render_rays(const RadianceField& field, const RayBatch& rays,
                         const SamplingConfig& scfg, nn::Rng* perturb_rng) {
  return render_rays(field_fn(field.coarse, field.enc), field_fn(field.fine, field.enc), rays,
                     scfg, perturb_rng);
}

Image render_view(const RadianceField& field, const CameraIntrinsics& intr,
                  const CameraPose& pose, const SamplingConfig& scfg) {
  RayBatch all = rays_for_pose(intr, pose, field.t_near, field.t_far);
  Image img(intr.height, intr.width, 3);
  const int chunk = 4096;
  const int total = static_cast<int>(all.count());
  for (int start = 0; start < total; start += chunk) {
    const int count = std::min(chunk, total - start);
    RayBatch part;
    part.origins = all.origins.middleRows(start, count);
    part.directions = all.directions.middleRows(start, count);
    part.t_near = all.t_near;
    part.t_far = all.t_far;
    RenderResult r = render_rays(field, part, scfg, nullptr);
    for (int i = 0; i < count; ++i) {
      const int pix = start + i;
      for (int c = 0; c < 3; ++c) {
        img.at(pix / intr.width, pix % intr.width, c) = r.fine_rgb(i, c);
      }
    }
  }
  return clamp01(img);
}

}  // namespace viewmark
