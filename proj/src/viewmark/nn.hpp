#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "image.hpp"
#include "serialize.hpp"

namespace viewmark::nn {

// Spatial feature map as a (h*w) x channels matrix; column c is channel
// plane c in row-major pixel order, so it converts to/from Image by memcpy.
struct Feature {
  int h = 0, w = 0;
  Eigen::MatrixXf m;

  Feature() = default;
  Feature(int h_, int w_, int ch) : h(h_), w(w_), m(Eigen::MatrixXf::Zero(h_ * w_, ch)) {}
  int channels() const { return static_cast<int>(m.cols()); }
};

Feature from_image(const Image& img);
Image to_image(const Feature& f);

using Rng = std::mt19937_64;

// 3x3 convolution, stride 1, pad 1: spatial dims are preserved. Weights are
// stored (in_ch*9) x out_ch so forward is one GEMM against the im2col matrix.
struct Conv3x3 {
  int in_ch = 0, out_ch = 0;
  Eigen::MatrixXf w;
  Eigen::VectorXf b;
  Eigen::MatrixXf gw;
  Eigen::VectorXf gb;

  Conv3x3() = default;
  Conv3x3(int in, int out, Rng& rng);

  // Concatenated inputs form the dense connections; im2col reads channel
  // runs from each part without materializing the concat.
  void forward(const std::vector<const Feature*>& xs, Feature& y, Eigen::MatrixXf* xt_cache) const;
  // Accumulates weight grads; when dxs is non-null, adds input grads into
  // the matching parts (which must be sized already).
  void backward(const Feature& dy, const Eigen::MatrixXf& xt, std::vector<Feature*>* dxs);

  void zero_grad();
  void serialize(BinWriter& wtr) const;
  void deserialize(BinReader& rdr);
};

// im2col for the 3x3/1/1 case. Output: (h*w) x (total_ch*9).
void im2col(const std::vector<const Feature*>& xs, Eigen::MatrixXf& xt);

// Per-channel batch normalization over the spatial extent.
struct BatchNorm {
  Eigen::VectorXf gamma, beta, g_gamma, g_beta;
  Eigen::VectorXf run_mean, run_var;
  float momentum = 0.1f;
  float eps = 1e-5f;

  struct Ctx {
    Eigen::VectorXf inv_std;
    Eigen::MatrixXf xhat;
  };

  BatchNorm() = default;
  explicit BatchNorm(int ch);

  void forward_train(const Feature& x, Feature& y, Ctx& ctx);
  void forward_eval(const Feature& x, Feature& y) const;
  void backward(const Feature& dy, const Ctx& ctx, Feature& dx);

  void zero_grad();
  void serialize(BinWriter& wtr) const;
  void deserialize(BinReader& rdr);
};

// Fully connected layer on row batches: y = x*w + b, x is (n x in).
struct Linear {
  Eigen::MatrixXf w;  // in x out
  Eigen::VectorXf b;
  Eigen::MatrixXf gw;
  Eigen::VectorXf gb;

  Linear() = default;
  Linear(int in, int out, Rng& rng);

  void forward(const Eigen::MatrixXf& x, Eigen::MatrixXf& y) const;
  // dx may alias nothing; pass nullptr to skip input grads for the first layer.
  void backward(const Eigen::MatrixXf& x, const Eigen::MatrixXf& dy, Eigen::MatrixXf* dx);

  void zero_grad();
  void serialize(BinWriter& wtr) const;
  void deserialize(BinReader& rdr);
};

inline void relu_inplace(Eigen::MatrixXf& x) { x = x.cwiseMax(0.0f); }

// dx = dy where y > 0 (masking on the activation output).
inline void relu_backward_inplace(const Eigen::MatrixXf& y, Eigen::MatrixXf& dy) {
  dy = (y.array() > 0.0f).select(dy, 0.0f);
}

// Adam with bias correction. Layers register parameter/grad pairs once;
// step() applies all updates in registration order (deterministic).
struct Adam {
  float beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;
  int64_t t = 0;

  struct Slot {
    float* w;
    const float* g;
    Eigen::VectorXf m, v;
    Eigen::Index n;
  };
  std::vector<Slot> slots;

  void add(float* w, const float* g, Eigen::Index n);
  void add(Eigen::MatrixXf& w, const Eigen::MatrixXf& g) { add(w.data(), g.data(), w.size()); }
  void add(Eigen::VectorXf& w, const Eigen::VectorXf& g) { add(w.data(), g.data(), w.size()); }
  void step(float lr);
};

}  // namespace viewmark::nn
