#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "camera.hpp"
#include "image.hpp"
#include "nn.hpp"
#include "traincfg.hpp"

namespace viewmark {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Frequency encoding: concat(v, sin(2^j pi v), cos(2^j pi v)), j < L.
struct EncodingConfig {
  int l_pos = 10;
  int l_dir = 4;
  bool include_input = true;

  int pos_dim() const { return 3 * ((include_input ? 1 : 0) + 2 * l_pos); }
  int dir_dim() const { return 3 * ((include_input ? 1 : 0) + 2 * l_dir); }
};

Eigen::VectorXf positional_encode(const Eigen::Vector3f& v, int octaves, bool include_input);
void encode_batch(const Eigen::MatrixX3f& v, int octaves, bool include_input, Eigen::MatrixXf& out);

struct SamplingConfig {
  int n_coarse = 64;
  int n_fine = 64;
  bool perturb = false;
  bool white_background = true;
};

void validate(const SamplingConfig& scfg);

// MLP dimensions. The full-scale trunk is 8x256 with the encoded position
// re-injected at layer 5 and a 128-unit color branch; desk-scale runs shrink
// these through the run config.
struct MlpConfig {
  int depth = 8;
  int width = 256;
  int skip_layer = 5;  // 1-indexed trunk layer whose input gets the skip concat
  int color_width = 128;
};

// One NeRF MLP: trunk -> {sigma head, feature}; [feature, dir] -> color.
// Sigma is rectified at render time; its head bias starts slightly negative
// so fresh fields render near-empty.
struct NerfMlp {
  MlpConfig cfg;
  std::vector<nn::Linear> trunk;
  nn::Linear sigma_head, feature, color_hidden, color_out;

  static NerfMlp init(const MlpConfig& cfg, const EncodingConfig& enc, nn::Rng& rng);

  struct Ws {
    std::vector<Eigen::MatrixXf> h;  // post-relu trunk activations
    Eigen::MatrixXf skip_in, feat, color_in, color_h, rgb;
    Eigen::VectorXf sigma_raw;
  };

  // x_enc: M x pos_dim, d_enc: M x dir_dim. Outputs in ws: sigma_raw (M)
  // and rgb (M x 3, sigmoid).
  void forward(const Eigen::MatrixXf& x_enc, const Eigen::MatrixXf& d_enc, Ws& ws) const;
  void backward(const Eigen::MatrixXf& x_enc, const Ws& ws, const Eigen::VectorXf& d_sigma_raw,
                const Eigen::MatrixXf& d_rgb);

  void zero_grad();
  void register_params(nn::Adam& opt);
  void serialize(BinWriter& wtr) const;
  void deserialize(BinReader& rdr);
};

// Coarse + fine field pair sharing one encoding config.
struct RadianceField {
  EncodingConfig enc;
  MlpConfig mlp;
  SamplingConfig sampling;  // defaults carried with the checkpoint
  double t_near = kDefaultTNear, t_far = kDefaultTFar;
  NerfMlp coarse, fine;

  static RadianceField init(const EncodingConfig& enc, const MlpConfig& mlp,
                            const SamplingConfig& sampling, double t_near, double t_far,
                            uint64_t seed);
  void save(const std::string& path) const;
  static RadianceField load(const std::string& path);
};

// Generic point-sampled field, so quadrature tests can use closed-form
// densities in place of an MLP.
using FieldFn = std::function<void(const Eigen::MatrixX3f& pts, const Eigen::MatrixX3f& dirs,
                                   Eigen::VectorXf& sigma, Eigen::MatrixX3f& rgb)>;

// Quadrature state of one composited batch (n_rays x n_samples).
struct CompositeCtx {
  int n_rays = 0, n_samples = 0;
  RowMat alpha, trans, weights;  // trans[i] = T_i before sample i
  Eigen::VectorXf sigma;         // post-rectifier, flattened ray-major
  Eigen::MatrixX3f rgb;
  RowMat deltas;
  bool white_background = true;
};

// Alpha-compositing quadrature: alpha = 1 - exp(-sigma*delta);
// T_i = prod_{j<i}(1-alpha_j); C = sum(T_i alpha_i c_i), plus T_final * 1
// when compositing over a white background.
void composite_forward(const Eigen::VectorXf& sigma, const Eigen::MatrixX3f& rgb,
                       const RowMat& deltas, bool white_background, Eigen::MatrixX3f& color,
                       CompositeCtx& ctx);

// d(loss)/d(sigma_i), d(loss)/d(rgb_i) from d(loss)/d(color).
void composite_backward(const CompositeCtx& ctx, const Eigen::MatrixX3f& d_color,
                        Eigen::VectorXf& d_sigma, Eigen::MatrixX3f& d_rgb);

// delta_i = t_{i+1} - t_i; the last interval closes at t_far so the
// quadrature covers exactly [t_n, t_f].
RowMat deltas_from_ts(const RowMat& ts, float t_far);

// Stratified coarse samples over [t_near, t_far]; midpoints when perturb
// is off, jittered within bins when on.
RowMat sample_coarse_ts(int n_rays, int n_samples, float t_near, float t_far, bool perturb,
                        nn::Rng& rng);

// Inverse-CDF resampling from per-interval coarse weights. Returns sorted
// union of coarse and fine samples, (n x (n_coarse + n_fine)).
RowMat importance_resample(const RowMat& coarse_ts, const RowMat& coarse_weights, int n_fine,
                           bool perturb, nn::Rng& rng);

// Per-sample points r(t) = o + t*d and broadcast directions for a batch.
void expand_ray_samples(const RayBatch& rays, const RowMat& ts, Eigen::MatrixX3f& pts,
                        Eigen::MatrixX3f& dirs);

struct RenderResult {
  Eigen::MatrixX3f coarse_rgb;
  Eigen::MatrixX3f fine_rgb;
  RowMat weights;  // fine-pass quadrature weights over the union samples
};

// Full coarse -> importance -> fine pipeline over arbitrary field functions.
RenderResult render_rays(const FieldFn& coarse_field, const FieldFn& fine_field,
                         const RayBatch& rays, const SamplingConfig& scfg, nn::Rng* perturb_rng);

RenderResult render_rays(const RadianceField& field, const RayBatch& rays,
                         const SamplingConfig& scfg, nn::Rng* perturb_rng = nullptr);

// Whole-image render at the fine output, deterministic with perturb off.
Image render_view(const RadianceField& field, const CameraIntrinsics& intr,
                  const CameraPose& pose, const SamplingConfig& scfg);

// Wraps an MLP as a FieldFn (rectifying sigma).
FieldFn field_fn(const NerfMlp& mlp, const EncodingConfig& enc);

struct NerfCurveRow {
  int step = 0;
  double loss_coarse = 0, loss_fine = 0, psnr_batch = 0;
};
struct ValCurveRow {
  int step = 0;
  int frame = 0;
  double psnr_db = 0;
};

struct Scene;  // dataset.hpp

struct NerfTrainLogs {
  std::vector<NerfCurveRow> curve;
  std::vector<ValCurveRow> val;
};

// Minimizes the two-network loss sum_r(|Cc - C|^2 + |Cf - C|^2) over random
// ray minibatches. val_scene may be empty; when present a rotating held-out
// frame is rendered every val_every steps.
RadianceField train_nerf(const Scene& scene, const Scene* val_scene, const SamplingConfig& scfg,
                         const TrainConfig& tcfg, const EncodingConfig& enc, const MlpConfig& mlp,
                         double t_near, double t_far, int batch_rays, double lr_decay,
                         int val_every, NerfTrainLogs& logs);

}  // namespace viewmark
