#include "metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace viewmark {

namespace {

void require_same_shape(const Image& x, const Image& y, const char* what) {
  if (!x.same_shape(y)) {
    throw ValidationError(strfmt("%s: shape mismatch (%dx%dx%d vs %dx%dx%d)", what, x.height,
                                 x.width, x.channels, y.height, y.width, y.channels));
  }
  if (x.height < 1 || x.channels < 1) throw ValidationError(strfmt("%s: empty image", what));
}

void require_finite(const Image& img, const char* what) {
  for (float v : img.data) {
    if (!std::isfinite(v)) throw ValidationError(strfmt("%s: non-finite pixel", what));
  }
}

// Double-precision channel plane; all SSIM math runs in double so the
// finite-difference oracles in the tests hold at 1e-4 relative.
struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
  Plane() = default;
  Plane(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0.0) {}
  double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

Plane channel_plane(const Image& img, int c, double scale) {
  Plane p(img.height, img.width);
  const float* src = img.plane(c);
  for (size_t i = 0; i < p.v.size(); ++i) p.v[i] = scale * src[i];
  return p;
}

const std::vector<double>& gauss_taps() {
  static const std::vector<double> taps = [] {
    std::vector<double> t(SsimConstants::window);
    const double s = SsimConstants::window_sigma;
    const int half = SsimConstants::window / 2;
    double sum = 0;
    for (int i = 0; i < SsimConstants::window; ++i) {
      t[i] = std::exp(-0.5 * (i - half) * (i - half) / (s * s));
      sum += t[i];
    }
    for (double& x : t) x /= sum;
    return t;
  }();
  return taps;
}

// Separable valid-mode correlation with the 11-tap Gaussian.
Plane filter_valid(const Plane& p) {
  const auto& k = gauss_taps();
  const int n = static_cast<int>(k.size());
  Plane rows(p.h, p.w - n + 1);
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < rows.w; ++x) {
      double acc = 0;
      for (int i = 0; i < n; ++i) acc += k[i] * p.at(y, x + i);
      rows.at(y, x) = acc;
    }
  }
  Plane out(p.h - n + 1, rows.w);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      double acc = 0;
      for (int i = 0; i < n; ++i) acc += k[i] * rows.at(y + i, x);
      out.at(y, x) = acc;
    }
  }
  return out;
}

// Adjoint of filter_valid: scatters a valid-grid gradient back to (h, w).
Plane filter_adjoint(const Plane& g, int h, int w) {
  const auto& k = gauss_taps();
  const int n = static_cast<int>(k.size());
  Plane rows(h, g.w);
  for (int y = 0; y < g.h; ++y) {
    for (int i = 0; i < n; ++i) {
      for (int x = 0; x < g.w; ++x) rows.at(y + i, x) += k[i] * g.at(y, x);
    }
  }
  Plane out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < rows.w; ++x) {
      double val = rows.at(y, x);
      if (val == 0.0) continue;
      for (int i = 0; i < n; ++i) out.at(y, x + i) += k[i] * val;
    }
  }
  return out;
}

// Single-channel SSIM on [0,255] planes. Returns the window mean; when grad
// is non-null, adds d(mean)/d(y-plane) into it (same h/w as y).
double ssim_plane(const Plane& x, const Plane& y, Plane* grad) {
  const double c1 = SsimConstants::c1;
  const double c2 = SsimConstants::c2;

  Plane mu_x = filter_valid(x);
  Plane mu_y = filter_valid(y);
  Plane xx(x.h, x.w), yy(x.h, x.w), xy(x.h, x.w);
  for (size_t i = 0; i < x.v.size(); ++i) {
    xx.v[i] = x.v[i] * x.v[i];
    yy.v[i] = y.v[i] * y.v[i];
    xy.v[i] = x.v[i] * y.v[i];
  }
  Plane sxx = filter_valid(xx), syy = filter_valid(yy), sxy = filter_valid(xy);

  const size_t nw = mu_x.v.size();
  double sum = 0;
  Plane d_mu(mu_x.h, mu_x.w), d_sy(mu_x.h, mu_x.w), d_sxy(mu_x.h, mu_x.w);
  for (size_t i = 0; i < nw; ++i) {
    const double mx = mu_x.v[i], my = mu_y.v[i];
    const double vx = sxx.v[i] - mx * mx;
    const double vy = syy.v[i] - my * my;
    const double cxy = sxy.v[i] - mx * my;
    const double a1 = 2 * mx * my + c1, a2 = 2 * cxy + c2;
    const double b1 = mx * mx + my * my + c1, b2 = vx + vy + c2;
    const double l = a1 / b1, cs = a2 / b2;
    sum += l * cs;
    if (grad) {
      d_mu.v[i] = cs * 2 * (mx * b1 - my * a1) / (b1 * b1);
      d_sy.v[i] = -l * a2 / (b2 * b2);
      d_sxy.v[i] = l * 2 / b2;
    }
  }
  const double mean = sum / static_cast<double>(nw);

  if (grad) {
    // Chain through mu_y = G*y, var_y = G*(y^2)-mu_y^2, cov = G*(xy)-mu_x*mu_y.
    Plane inner(mu_x.h, mu_x.w);
    for (size_t i = 0; i < nw; ++i) {
      inner.v[i] = d_mu.v[i] - 2 * mu_y.v[i] * d_sy.v[i] - mu_x.v[i] * d_sxy.v[i];
    }
    Plane g0 = filter_adjoint(inner, x.h, x.w);
    Plane g2 = filter_adjoint(d_sy, x.h, x.w);
    Plane g3 = filter_adjoint(d_sxy, x.h, x.w);
    const double inv_nw = 1.0 / static_cast<double>(nw);
    for (size_t i = 0; i < x.v.size(); ++i) {
      grad->v[i] += inv_nw * (g0.v[i] + 2 * y.v[i] * g2.v[i] + x.v[i] * g3.v[i]);
    }
  }
  return mean;
}

Plane downsample2(const Plane& p) {
  Plane out(p.h / 2, p.w / 2);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      out.at(y, x) = 0.25 * (p.at(2 * y, 2 * x) + p.at(2 * y, 2 * x + 1) +
                             p.at(2 * y + 1, 2 * x) + p.at(2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

Plane upsample2_adjoint(const Plane& g, int h, int w) {
  Plane out(h, w);
  for (int y = 0; y < g.h; ++y) {
    for (int x = 0; x < g.w; ++x) {
      double q = 0.25 * g.at(y, x);
      out.at(2 * y, 2 * x) += q;
      out.at(2 * y, 2 * x + 1) += q;
      out.at(2 * y + 1, 2 * x) += q;
      out.at(2 * y + 1, 2 * x + 1) += q;
    }
  }
  return out;
}

double ssim_core(const Image& x, const Image& y, Image* grad) {
  require_same_shape(x, y, "ssim");
  require_finite(x, "ssim");
  require_finite(y, "ssim");
  if (x.height < SsimConstants::window || x.width < SsimConstants::window) {
    throw ValidationError(strfmt("ssim: image %dx%d smaller than %dx%d window", x.height, x.width,
                                 SsimConstants::window, SsimConstants::window));
  }
  double acc = 0;
  for (int c = 0; c < x.channels; ++c) {
    Plane px = channel_plane(x, c, SsimConstants::dynamic_range);
    Plane py = channel_plane(y, c, SsimConstants::dynamic_range);
    Plane g(px.h, px.w);
    acc += ssim_plane(px, py, grad ? &g : nullptr);
    if (grad) {
      // d/d(y in [0,1]) = 255 * d/d(y in [0,255]); channel average below.
      float* dst = grad->plane(c);
      const double scale = SsimConstants::dynamic_range / x.channels;
      for (size_t i = 0; i < g.v.size(); ++i) dst[i] += static_cast<float>(scale * g.v[i]);
    }
  }
  return acc / x.channels;
}

double ms_ssim_core(const Image& x, const Image& y, Image* grad) {
  require_same_shape(x, y, "ms_ssim");
  require_finite(x, "ms_ssim");
  require_finite(y, "ms_ssim");
  const int scales = ms_ssim_scales(x.height, x.width);
  if (scales < 1) {
    throw ValidationError(
        strfmt("ms_ssim: image %dx%d smaller than the base window", x.height, x.width));
  }

  // Per-channel pyramids of [0,255] planes.
  std::vector<std::vector<Plane>> pyr_x(x.channels), pyr_y(x.channels);
  for (int c = 0; c < x.channels; ++c) {
    pyr_x[c].push_back(channel_plane(x, c, SsimConstants::dynamic_range));
    pyr_y[c].push_back(channel_plane(y, c, SsimConstants::dynamic_range));
    for (int m = 1; m < scales; ++m) {
      pyr_x[c].push_back(downsample2(pyr_x[c][m - 1]));
      pyr_y[c].push_back(downsample2(pyr_y[c][m - 1]));
    }
  }

  std::vector<double> term(scales, 0.0);
  std::vector<std::vector<Plane>> grads;  // [scale][channel]
  if (grad) grads.resize(scales);
  for (int m = 0; m < scales; ++m) {
    double acc = 0;
    for (int c = 0; c < x.channels; ++c) {
      Plane g(pyr_y[c][m].h, pyr_y[c][m].w);
      acc += ssim_plane(pyr_x[c][m], pyr_y[c][m], grad ? &g : nullptr);
      if (grad) grads[m].push_back(std::move(g));
    }
    term[m] = acc / x.channels;
  }

  double value = 1.0;
  for (double t : term) value *= t;

  if (grad) {
    for (int m = 0; m < scales; ++m) {
      double coeff = 1.0;
      for (int k = 0; k < scales; ++k) {
        if (k != m) coeff *= term[k];
      }
      coeff *= SsimConstants::dynamic_range / x.channels;
      for (int c = 0; c < x.channels; ++c) {
        Plane g = std::move(grads[m][c]);
        // Walk the gradient back up the pyramid to full resolution.
        for (int lv = m; lv >= 1; --lv) {
          g = upsample2_adjoint(g, pyr_y[c][lv - 1].h, pyr_y[c][lv - 1].w);
        }
        float* dst = grad->plane(c);
        for (size_t i = 0; i < g.v.size(); ++i) dst[i] += static_cast<float>(coeff * g.v[i]);
      }
    }
  }
  return value;
}

void prepare_grad(Image& grad, const Image& like) {
  if (!grad.same_shape(like)) grad = Image(like.height, like.width, like.channels);
  std::fill(grad.data.begin(), grad.data.end(), 0.0f);
}

}  // namespace

int ms_ssim_scales(int height, int width) {
  int m = 0, h = height, w = width;
  while (m < SsimConstants::ms_scales && h >= SsimConstants::window &&
         w >= SsimConstants::window) {
    ++m;
    h /= 2;
    w /= 2;
  }
  return m;
}

double mse(const Image& x, const Image& y) {
  require_same_shape(x, y, "mse");
  double acc = 0;
  for (size_t i = 0; i < x.data.size(); ++i) {
    double d = static_cast<double>(x.data[i]) - y.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.data.size());
}

double psnr(const Image& x, const Image& y) {
  double m = mse(x, y);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(m);  // peak = 1 on [0,1] images
}

double ssim(const Image& x, const Image& y) { return ssim_core(x, y, nullptr); }

double ms_ssim(const Image& x, const Image& y) { return ms_ssim_core(x, y, nullptr); }

double ber(const Image& x, const Image& y) {
  double p = psnr(x, y);
  if (std::isinf(p)) return 0.0;
  return 1.0 / p;
}

double nc(const Image& w, const Image& w_prime) {
  require_same_shape(w, w_prime, "nc");
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < w.data.size(); ++i) {
    dot += static_cast<double>(w.data[i]) * w_prime.data[i];
    na += static_cast<double>(w.data[i]) * w.data[i];
    nb += static_cast<double>(w_prime.data[i]) * w_prime.data[i];
  }
  if (na == 0.0 || nb == 0.0) throw ValidationError("nc: all-zero image, undefined denominator");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double loss_le(const Image& k, const Image& k_prime, const LossWeights& wts) {
  return wts.alpha * mse(k, k_prime);
}

double loss_ld(const Image& w, const Image& w_prime, const LossWeights& wts) {
  return wts.beta * mse(w, w_prime) + wts.gamma * (1.0 - ssim(w, w_prime)) +
         wts.mu * (1.0 - ms_ssim(w, w_prime));
}

double mse_grad(const Image& x, const Image& y, Image& grad) {
  require_same_shape(x, y, "mse");
  prepare_grad(grad, y);
  const double n = static_cast<double>(x.data.size());
  double acc = 0;
  for (size_t i = 0; i < x.data.size(); ++i) {
    double d = static_cast<double>(y.data[i]) - x.data[i];
    acc += d * d;
    grad.data[i] = static_cast<float>(2.0 * d / n);
  }
  return acc / n;
}

double ssim_grad(const Image& x, const Image& y, Image& grad) {
  prepare_grad(grad, y);
  return ssim_core(x, y, &grad);
}

double ms_ssim_grad(const Image& x, const Image& y, Image& grad) {
  prepare_grad(grad, y);
  return ms_ssim_core(x, y, &grad);
}

double loss_ld_grad(const Image& w, const Image& w_prime, const LossWeights& wts, Image& grad) {
  prepare_grad(grad, w_prime);
  Image g;
  double value = 0;
  value += wts.beta * mse_grad(w, w_prime, g);
  for (size_t i = 0; i < grad.data.size(); ++i) {
    grad.data[i] += static_cast<float>(wts.beta) * g.data[i];
  }
  value += wts.gamma * (1.0 - ssim_grad(w, w_prime, g));
  for (size_t i = 0; i < grad.data.size(); ++i) {
    grad.data[i] -= static_cast<float>(wts.gamma) * g.data[i];
  }
  value += wts.mu * (1.0 - ms_ssim_grad(w, w_prime, g));
  for (size_t i = 0; i < grad.data.size(); ++i) {
    grad.data[i] -= static_cast<float>(wts.mu) * g.data[i];
  }
  return value;
}

}  // namespace viewmark
