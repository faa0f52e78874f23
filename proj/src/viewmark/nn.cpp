#include "nn.hpp"

#include <cmath>
#include <cstring>

namespace viewmark::nn {

Feature from_image(const Image& img) {
  Feature f(img.height, img.width, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    std::memcpy(f.m.col(c).data(), img.plane(c), sizeof(float) * img.height * img.width);
  }
  return f;
}

Image to_image(const Feature& f) {
  Image img(f.h, f.w, f.channels());
  for (int c = 0; c < f.channels(); ++c) {
    std::memcpy(img.plane(c), f.m.col(c).data(), sizeof(float) * f.h * f.w);
  }
  return img;
}

namespace {

float init_bound(int fan_in) { return 1.0f / std::sqrt(static_cast<float>(fan_in)); }

void fill_uniform(Eigen::MatrixXf& m, float bound, Rng& rng) {
  std::uniform_real_distribution<float> dist(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

}  // namespace

void im2col(const std::vector<const Feature*>& xs, Eigen::MatrixXf& xt) {
  const int h = xs[0]->h, w = xs[0]->w;
  int total_ch = 0;
  for (const Feature* f : xs) total_ch += f->channels();
  xt.resize(static_cast<Eigen::Index>(h) * w, static_cast<Eigen::Index>(total_ch) * 9);

  int k = 0;  // global channel index
  for (const Feature* f : xs) {
    for (int c = 0; c < f->channels(); ++c, ++k) {
      const float* src = f->m.col(c).data();
      for (int t = 0; t < 9; ++t) {
        const int dy = t / 3 - 1, dx = t % 3 - 1;
        float* dst = xt.col(static_cast<Eigen::Index>(k) * 9 + t).data();
        const int x0 = std::max(0, -dx), x1 = w - std::max(0, dx);  // valid column span
        for (int y = 0; y < h; ++y) {
          float* drow = dst + static_cast<size_t>(y) * w;
          const int sy = y + dy;
          if (sy < 0 || sy >= h) {
            std::memset(drow, 0, sizeof(float) * w);
            continue;
          }
          const float* srow = src + static_cast<size_t>(sy) * w;
          if (dx > 0) drow[w - 1] = 0.0f;
          if (dx < 0) drow[0] = 0.0f;
          if (x1 > x0) std::memcpy(drow + x0, srow + x0 + dx, sizeof(float) * (x1 - x0));
        }
      }
    }
  }
}

Conv3x3::Conv3x3(int in, int out, Rng& rng) : in_ch(in), out_ch(out) {
  w.resize(static_cast<Eigen::Index>(in) * 9, out);
  fill_uniform(w, init_bound(in * 9), rng);
  b = Eigen::VectorXf::Zero(out);
  zero_grad();
}

void Conv3x3::zero_grad() {
  gw = Eigen::MatrixXf::Zero(w.rows(), w.cols());
  gb = Eigen::VectorXf::Zero(b.size());
}

void Conv3x3::forward(const std::vector<const Feature*>& xs, Feature& y,
                      Eigen::MatrixXf* xt_cache) const {
  Eigen::MatrixXf local;
  Eigen::MatrixXf& xt = xt_cache ? *xt_cache : local;
  im2col(xs, xt);
  y.h = xs[0]->h;
  y.w = xs[0]->w;
  y.m.noalias() = xt * w;
  y.m.rowwise() += b.transpose();
}

void Conv3x3::backward(const Feature& dy, const Eigen::MatrixXf& xt, std::vector<Feature*>* dxs) {
  gw.noalias() += xt.transpose() * dy.m;
  gb.noalias() += dy.m.colwise().sum().transpose();
  if (!dxs) return;

  Eigen::MatrixXf dxt = dy.m * w.transpose();  // (h*w) x (in_ch*9)
  const int h = dy.h, w_ = dy.w;
  int k = 0;
  for (Feature* part : *dxs) {
    for (int c = 0; c < part->channels(); ++c, ++k) {
      float* dst = part->m.col(c).data();
      for (int t = 0; t < 9; ++t) {
        const int dyo = t / 3 - 1, dxo = t % 3 - 1;
        const float* src = dxt.col(static_cast<Eigen::Index>(k) * 9 + t).data();
        const int x0 = std::max(0, -dxo), x1 = w_ - std::max(0, dxo);
        for (int y = 0; y < h; ++y) {
          const int sy = y + dyo;
          if (sy < 0 || sy >= h || x1 <= x0) continue;
          float* drow = dst + static_cast<size_t>(sy) * w_ + x0 + dxo;
          const float* srow = src + static_cast<size_t>(y) * w_ + x0;
          for (int x = 0; x < x1 - x0; ++x) drow[x] += srow[x];
        }
      }
    }
  }
}

void Conv3x3::serialize(BinWriter& wtr) const {
  wtr.write_i32(in_ch);
  wtr.write_i32(out_ch);
  wtr.write_matrix(w);
  wtr.write_vector(b);
}

void Conv3x3::deserialize(BinReader& rdr) {
  in_ch = rdr.read_i32();
  out_ch = rdr.read_i32();
  w = rdr.read_matrix();
  b = rdr.read_vector();
  if (w.rows() != static_cast<Eigen::Index>(in_ch) * 9 || w.cols() != out_ch) {
    throw DecodeError("conv checkpoint shape mismatch");
  }
  zero_grad();
}

BatchNorm::BatchNorm(int ch) {
  gamma = Eigen::VectorXf::Ones(ch);
  beta = Eigen::VectorXf::Zero(ch);
  run_mean = Eigen::VectorXf::Zero(ch);
  run_var = Eigen::VectorXf::Ones(ch);
  zero_grad();
}

void BatchNorm::zero_grad() {
  g_gamma = Eigen::VectorXf::Zero(gamma.size());
  g_beta = Eigen::VectorXf::Zero(beta.size());
}

void BatchNorm::forward_train(const Feature& x, Feature& y, Ctx& ctx) {
  const Eigen::Index n = x.m.rows();
  const int ch = x.channels();
  y.h = x.h;
  y.w = x.w;
  y.m.resize(n, ch);
  ctx.inv_std.resize(ch);
  ctx.xhat.resize(n, ch);
  for (int c = 0; c < ch; ++c) {
    const auto col = x.m.col(c);
    const float mean = col.mean();
    const float var = (col.array() - mean).square().sum() / static_cast<float>(n);
    const float inv_std = 1.0f / std::sqrt(var + eps);
    ctx.inv_std[c] = inv_std;
    ctx.xhat.col(c) = (col.array() - mean) * inv_std;
    y.m.col(c) = gamma[c] * ctx.xhat.col(c).array() + beta[c];
    run_mean[c] = (1 - momentum) * run_mean[c] + momentum * mean;
    run_var[c] = (1 - momentum) * run_var[c] + momentum * var;
  }
}

void BatchNorm::forward_eval(const Feature& x, Feature& y) const {
  y.h = x.h;
  y.w = x.w;
  y.m.resize(x.m.rows(), x.m.cols());
  for (int c = 0; c < x.channels(); ++c) {
    const float inv_std = 1.0f / std::sqrt(run_var[c] + eps);
    y.m.col(c) = gamma[c] * ((x.m.col(c).array() - run_mean[c]) * inv_std) + beta[c];
  }
}

void BatchNorm::backward(const Feature& dy, const Ctx& ctx, Feature& dx) {
  const Eigen::Index n = dy.m.rows();
  dx.h = dy.h;
  dx.w = dy.w;
  dx.m.resize(n, dy.m.cols());
  for (int c = 0; c < dy.channels(); ++c) {
    const auto g = dy.m.col(c);
    const auto xh = ctx.xhat.col(c);
    g_gamma[c] += g.dot(xh);
    g_beta[c] += g.sum();
    const float mg = g.mean();
    const float mgx = g.dot(xh) / static_cast<float>(n);
    dx.m.col(c) =
        (gamma[c] * ctx.inv_std[c]) * (g.array() - mg - xh.array() * mgx);
  }
}

void BatchNorm::serialize(BinWriter& wtr) const {
  wtr.write_vector(gamma);
  wtr.write_vector(beta);
  wtr.write_vector(run_mean);
  wtr.write_vector(run_var);
}

void BatchNorm::deserialize(BinReader& rdr) {
  gamma = rdr.read_vector();
  beta = rdr.read_vector();
  run_mean = rdr.read_vector();
  run_var = rdr.read_vector();
  zero_grad();
}

Linear::Linear(int in, int out, Rng& rng) {
  w.resize(in, out);
  fill_uniform(w, init_bound(in), rng);
  b = Eigen::VectorXf::Zero(out);
  zero_grad();
}

void Linear::zero_grad() {
  gw = Eigen::MatrixXf::Zero(w.rows(), w.cols());
  gb = Eigen::VectorXf::Zero(b.size());
}

void Linear::forward(const Eigen::MatrixXf& x, Eigen::MatrixXf& y) const {
  y.noalias() = x * w;
  y.rowwise() += b.transpose();
}

void Linear::backward(const Eigen::MatrixXf& x, const Eigen::MatrixXf& dy, Eigen::MatrixXf* dx) {
  gw.noalias() += x.transpose() * dy;
  gb.noalias() += dy.colwise().sum().transpose();
  if (dx) dx->noalias() = dy * w.transpose();
}

void Linear::serialize(BinWriter& wtr) const {
  wtr.write_matrix(w);
  wtr.write_vector(b);
}

void Linear::deserialize(BinReader& rdr) {
  w = rdr.read_matrix();
  b = rdr.read_vector();
  zero_grad();
}

void Adam::add(float* w, const float* g, Eigen::Index n) {
  slots.push_back({w, g, Eigen::VectorXf::Zero(n), Eigen::VectorXf::Zero(n), n});
}

void Adam::step(float lr) {
  ++t;
  const float bc1 = 1.0f - std::pow(beta1, static_cast<float>(t));
  const float bc2 = 1.0f - std::pow(beta2, static_cast<float>(t));
  for (Slot& s : slots) {
    Eigen::Map<Eigen::VectorXf> w(s.w, s.n);
    Eigen::Map<const Eigen::VectorXf> g(s.g, s.n);
    s.m = beta1 * s.m + (1 - beta1) * g;
    s.v = beta2 * s.v + (1 - beta2) * g.cwiseProduct(g);
    w.array() -= lr * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + eps);
  }
}

}  // namespace viewmark::nn
