#include <cmath>

#include "dataset.hpp"
#include "metrics.hpp"
#include "nerf.hpp"

namespace viewmark {

namespace {

// All training rays of a scene, flattened frame-major then pixel-major.
struct RayPool {
  Eigen::MatrixX3f origins, directions, targets;
  float t_near = 0, t_far = 0;
};

RayPool build_ray_pool(const Scene& scene, double t_near, double t_far) {
  const Eigen::Index per_frame =
      static_cast<Eigen::Index>(scene.intrinsics.width) * scene.intrinsics.height;
  const Eigen::Index total = per_frame * static_cast<Eigen::Index>(scene.frames.size());
  RayPool pool;
  pool.origins.resize(total, 3);
  pool.directions.resize(total, 3);
  pool.targets.resize(total, 3);
  pool.t_near = static_cast<float>(t_near);
  pool.t_far = static_cast<float>(t_far);
  for (size_t f = 0; f < scene.frames.size(); ++f) {
    const RayBatch rays = rays_for_pose(scene.intrinsics, scene.frames[f].pose, t_near, t_far);
    const Eigen::Index base = static_cast<Eigen::Index>(f) * per_frame;
    pool.origins.middleRows(base, per_frame) = rays.origins;
    pool.directions.middleRows(base, per_frame) = rays.directions;
    const Image& img = scene.frames[f].image;
    for (Eigen::Index p = 0; p < per_frame; ++p) {
      const int y = static_cast<int>(p) / img.width;
      const int x = static_cast<int>(p) % img.width;
      for (int c = 0; c < 3; ++c) pool.targets(base + p, c) = img.at(y, x, c);
    }
  }
  return pool;
}

// One network's forward + composite + mse backward. Returns the mean
// squared error over the batch.
double pass_and_backward(NerfMlp& mlp, const EncodingConfig& enc, const RayBatch& batch,
                         const RowMat& ts, const Eigen::MatrixX3f& targets, bool white_bg,
                         float t_far, RowMat* weights_out, Eigen::MatrixX3f* color_out) {
  Eigen::MatrixX3f pts, dirs;
  expand_ray_samples(batch, ts, pts, dirs);
  Eigen::MatrixXf x_enc, d_enc;
  encode_batch(pts, enc.l_pos, enc.include_input, x_enc);
  encode_batch(dirs, enc.l_dir, enc.include_input, d_enc);

  NerfMlp::Ws ws;
  mlp.forward(x_enc, d_enc, ws);
  Eigen::VectorXf sigma = ws.sigma_raw.cwiseMax(0.0f);

  Eigen::MatrixX3f color;
  CompositeCtx ctx;
  composite_forward(sigma, ws.rgb, deltas_from_ts(ts, t_far), white_bg, color, ctx);

  const double n = static_cast<double>(color.size());
  const Eigen::MatrixX3f diff = color - targets;
  const double loss = diff.squaredNorm() / n;

  Eigen::MatrixX3f d_color = static_cast<float>(2.0 / n) * diff;
  Eigen::VectorXf d_sigma;
  Eigen::MatrixX3f d_rgb;
  composite_backward(ctx, d_color, d_sigma, d_rgb);
  // Rectifier mask on the raw sigma head output.
  d_sigma = (ws.sigma_raw.array() > 0.0f).select(d_sigma, 0.0f);
  mlp.backward(x_enc, ws, d_sigma, d_rgb);

  if (weights_out) *weights_out = std::move(ctx.weights);
  if (color_out) *color_out = color;
  return loss;
}

}  // namespace

RadianceField train_nerf(const Scene& scene, const Scene* val_scene, const SamplingConfig& scfg,
                         const TrainConfig& tcfg, const EncodingConfig& enc, const MlpConfig& mlp,
                         double t_near, double t_far, int batch_rays, double lr_decay,
                         int val_every, NerfTrainLogs& logs) {
  validate(scfg);
  if (scene.frames.size() < 2) throw ValidationError("train_nerf: scene needs >= 2 frames");
  if (tcfg.steps < 1) throw ConfigError("train_nerf: steps must be >= 1");
  if (batch_rays < 1) throw ConfigError("train_nerf: batch_rays must be >= 1");

  RadianceField field = RadianceField::init(enc, mlp, scfg, t_near, t_far, tcfg.seed);
  nn::Adam opt;
  field.coarse.register_params(opt);
  field.fine.register_params(opt);

  const RayPool pool = build_ray_pool(scene, t_near, t_far);
  nn::Rng rng(tcfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<Eigen::Index> pick(0, pool.origins.rows() - 1);

  RayBatch batch;
  batch.t_near = pool.t_near;
  batch.t_far = pool.t_far;
  Eigen::MatrixX3f targets(batch_rays, 3);
  batch.origins.resize(batch_rays, 3);
  batch.directions.resize(batch_rays, 3);

  for (int step = 0; step < tcfg.steps; ++step) {
    for (int i = 0; i < batch_rays; ++i) {
      const Eigen::Index idx = pick(rng);
      batch.origins.row(i) = pool.origins.row(idx);
      batch.directions.row(i) = pool.directions.row(idx);
      targets.row(i) = pool.targets.row(idx);
    }

    field.coarse.zero_grad();
    field.fine.zero_grad();

    RowMat ts =
        sample_coarse_ts(batch_rays, scfg.n_coarse, pool.t_near, pool.t_far, scfg.perturb, rng);
    RowMat coarse_weights;
    const double loss_c =
        pass_and_backward(field.coarse, enc, batch, ts, targets, scfg.white_background,
                          pool.t_far, &coarse_weights, nullptr);

    RowMat union_ts = importance_resample(ts, coarse_weights, scfg.n_fine, scfg.perturb, rng);
    Eigen::MatrixX3f fine_color;
    const double loss_f =
        pass_and_backward(field.fine, enc, batch, union_ts, targets, scfg.white_background,
                          pool.t_far, nullptr, &fine_color);

    if (!std::isfinite(loss_c) || !std::isfinite(loss_f)) {
      throw TrainingError(strfmt("train_nerf: loss diverged at step %d", step));
    }

    const float lr =
        static_cast<float>(tcfg.lr * std::pow(lr_decay, static_cast<double>(step) / tcfg.steps));
    opt.step(lr);

    if (step % tcfg.log_every == 0 || step == tcfg.steps - 1) {
      const double m = (fine_color - targets).squaredNorm() / fine_color.size();
      logs.curve.push_back({step, loss_c, loss_f, m > 0 ? -10.0 * std::log10(m) : 99.0});
    }
    if (val_scene && !val_scene->frames.empty() && val_every > 0 &&
        ((step + 1) % val_every == 0 || step == tcfg.steps - 1)) {
      const int vf = (step / val_every) % static_cast<int>(val_scene->frames.size());
      SamplingConfig eval_cfg = scfg;
      eval_cfg.perturb = false;
      const Image rendered =
          render_view(field, val_scene->intrinsics, val_scene->frames[vf].pose, eval_cfg);
      logs.val.push_back({step, vf, psnr(val_scene->frames[vf].image, rendered)});
    }
  }
  return field;
}

}  // namespace viewmark
