#pragma once

#include "image.hpp"

namespace viewmark {

// Weights of the two training objectives: alpha scales the carrier content
// loss, beta/gamma/mu scale the watermark MSE / SSIM / MS-SSIM terms.
struct LossWeights {
  double alpha = 0.3;
  double beta = 0.3;
  double gamma = 0.5;
  double mu = 0.5;
};

// Reference SSIM settings. Pixels are rescaled to [0,255] inside the metric;
// the [0,1] and [0,255] PSNR conventions agree, SSIM constants do not.
struct SsimConstants {
  static constexpr double k1 = 0.01;
  static constexpr double k2 = 0.03;
  static constexpr double dynamic_range = 255.0;
  static constexpr double c1 = (k1 * dynamic_range) * (k1 * dynamic_range);
  static constexpr double c2 = (k2 * dynamic_range) * (k2 * dynamic_range);
  static constexpr int window = 11;
  static constexpr double window_sigma = 1.5;
  static constexpr int ms_scales = 5;
};

// Mean squared difference over all pixels and channels, [0,1] scale.
double mse(const Image& x, const Image& y);

// 20*log10(peak) - 10*log10(mse), peak = 1. Returns +inf when mse == 0.
double psnr(const Image& x, const Image& y);

// Mean over sliding 11x11 Gaussian windows and channels. Requires H,W >= 11.
double ssim(const Image& x, const Image& y);

// Product over dyadic scales of the per-scale SSIM mean, unit exponents.
// The scale count drops below SsimConstants::ms_scales when the image is too
// small for 5 halvings; ms_ssim_scales reports the count used.
double ms_ssim(const Image& x, const Image& y);
int ms_ssim_scales(int height, int width);

// Reciprocal of psnr; 0 for identical images.
double ber(const Image& x, const Image& y);

// Cosine similarity of the flattened pixel vectors. Rejects all-zero input.
double nc(const Image& w, const Image& w_prime);

// Carrier content loss: alpha * mse(k, k').
double loss_le(const Image& k, const Image& k_prime, const LossWeights& wts);

// Watermark content loss: beta*mse + gamma*(1-ssim) + mu*(1-ms_ssim).
double loss_ld(const Image& w, const Image& w_prime, const LossWeights& wts);

// Differentiable variants. grad receives d(value)/d(candidate) on the [0,1]
// pixel scale and must be preallocated to the candidate's shape (or empty,
// in which case it is allocated). The value equals the plain metric exactly.
double mse_grad(const Image& x, const Image& y, Image& grad);
double ssim_grad(const Image& x, const Image& y, Image& grad);
double ms_ssim_grad(const Image& x, const Image& y, Image& grad);
double loss_ld_grad(const Image& w, const Image& w_prime, const LossWeights& wts, Image& grad);

}  // namespace viewmark
