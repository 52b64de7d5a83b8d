// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/losses.hpp"

#include <cmath>

namespace awm {

namespace {

constexpr double kSsimC1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
constexpr double kSsimC2 = 0.03 * 0.03;

Tensor gaussian_kernel(int win, double sigma = 1.5) {
  Tensor k({1, 1, win, win});
  const double center = (win - 1) / 2.0;
  double sum = 0.0;
  for (int y = 0; y < win; ++y)
    for (int x = 0; x < win; ++x) {
      const double dy = y - center, dx = x - center;
      const double v = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
      k[static_cast<std::size_t>(y) * win + x] = v;
      sum += v;
    }
  for (double& v : k.vec()) v /= sum;
  return k;
}

ad::Value luminance_node(ad::Tape& t, ad::Value rgb) {
  return ad::slice_ch(t, ad::rgb_to_ycbcr_node(t, rgb), 0, 1);
}

ad::Value replicate3_node(ad::Tape& t, ad::Value gray) {
  ad::Value two = ad::concat_ch(t, gray, gray);
  return ad::concat_ch(t, two, gray);
}

}  // namespace

ad::Value ssim_mean_node(ad::Tape& t, ad::Value x, ad::Value y) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 3 || xv.dim(0) != 1)
    throw DimMismatch("ssim: expects [1,H,W] planes");
  require_same_shape(xv, t.val(y), "ssim");
  int win = std::min({11, xv.dim(1), xv.dim(2)});
  if (win % 2 == 0) --win;
  if (win < 3) throw DimMismatch("ssim: image too small");
  ad::Value kernel = t.constant(gaussian_kernel(win));
  ad::ConvSpec valid;  // no padding: valid windows only

  auto blur = [&](ad::Value v) { return ad::conv2d(t, v, kernel, {}, valid); };
  ad::Value mu_x = blur(x);
  ad::Value mu_y = blur(y);
  ad::Value mu_xx = ad::mul(t, mu_x, mu_x);
  ad::Value mu_yy = ad::mul(t, mu_y, mu_y);
  ad::Value mu_xy = ad::mul(t, mu_x, mu_y);
  ad::Value sigma_x = ad::sub(t, blur(ad::mul(t, x, x)), mu_xx);
  ad::Value sigma_y = ad::sub(t, blur(ad::mul(t, y, y)), mu_yy);
  ad::Value sigma_xy = ad::sub(t, blur(ad::mul(t, x, y)), mu_xy);

  ad::Value num = ad::mul(t, ad::add_scalar(t, ad::scale(t, mu_xy, 2.0), kSsimC1),
                          ad::add_scalar(t, ad::scale(t, sigma_xy, 2.0), kSsimC2));
  ad::Value den =
      ad::mul(t, ad::add_scalar(t, ad::add(t, mu_xx, mu_yy), kSsimC1),
              ad::add_scalar(t, ad::add(t, sigma_x, sigma_y), kSsimC2));
  return ad::mean_all(t, ad::div(t, num, den));
}

ad::Value color_loss_node(ad::Tape& t, ad::Value fused_rgb,
                          ad::Value clean_vi_rgb) {
  const Tensor& fv = t.val(fused_rgb);
  require_same_shape(fv, t.val(clean_vi_rgb), "color_loss");
  const double inv_hw = 1.0 / (double(fv.dim(1)) * fv.dim(2));
  ad::Value cbcr_f = ad::slice_ch(t, ad::rgb_to_ycbcr_node(t, fused_rgb), 1, 2);
  ad::Value cbcr_c =
      ad::slice_ch(t, ad::rgb_to_ycbcr_node(t, clean_vi_rgb), 1, 2);
  return ad::scale(t, ad::sum_all(t, ad::abs_of(t, ad::sub(t, cbcr_f, cbcr_c))),
                   inv_hw);
}

ad::Value l1_loss_node(ad::Tape& t, ad::Value fused_rgb, ad::Value clean_vi_rgb,
                       ad::Value clean_ir_gray) {
  const Tensor& fv = t.val(fused_rgb);
  require_same_shape(fv, t.val(clean_vi_rgb), "l1_loss");
  const Tensor& irv = t.val(clean_ir_gray);
  if (irv.dim(1) != fv.dim(1) || irv.dim(2) != fv.dim(2))
    throw ShapeMismatch("l1_loss: infrared size mismatch");
  const double inv_hw = 1.0 / (double(fv.dim(1)) * fv.dim(2));
  ad::Value ir3 = replicate3_node(t, clean_ir_gray);
  ad::Value term_vi =
      ad::sum_all(t, ad::abs_of(t, ad::sub(t, fused_rgb, clean_vi_rgb)));
  ad::Value term_ir = ad::sum_all(t, ad::abs_of(t, ad::sub(t, fused_rgb, ir3)));
  return ad::scale(t, ad::add(t, term_vi, term_ir), inv_hw);
}

ad::Value ssim_loss_node(ad::Tape& t, ad::Value fused_rgb,
                         ad::Value clean_vi_rgb, ad::Value clean_ir_gray) {
  ad::Value lum_f = luminance_node(t, fused_rgb);
  ad::Value lum_vi = luminance_node(t, clean_vi_rgb);
  ad::Value s_vi = ssim_mean_node(t, lum_f, lum_vi);
  ad::Value s_ir = ssim_mean_node(t, lum_f, clean_ir_gray);
  return ad::add_scalar(t, ad::neg_of(t, ad::add(t, s_vi, s_ir)), 2.0);
}

ad::Value vlm_loss_node(ad::Tape& t, ad::Value fused_rgb,
                        const Tensor& clean_text_embedding,
                        const DifferentiableImageEncoder& encoder) {
  // Normalize the target so the dot product is exactly the cosine.
  Tensor target = clean_text_embedding;
  double nsq = 0.0;
  for (double v : target.vec()) nsq += v * v;
  const double n = std::max(std::sqrt(nsq), 1e-12);
  for (double& v : target.vec()) v /= n;

  ad::Value img = encoder.encode_image_node(t, fused_rgb);
  ad::Value cos = ad::dot(t, img, t.constant(std::move(target)));
  return ad::add_scalar(t, ad::neg_of(t, cos), 1.0);
}

LossNodes total_loss_node(ad::Tape& t, ad::Value fused_rgb,
                          ad::Value clean_vi_rgb, ad::Value clean_ir_gray,
                          const Tensor* clean_text_embedding,
                          const DifferentiableImageEncoder* encoder) {
  LossNodes nodes;
  nodes.color = color_loss_node(t, fused_rgb, clean_vi_rgb);
  nodes.l1 = l1_loss_node(t, fused_rgb, clean_vi_rgb, clean_ir_gray);
  nodes.ssim = ssim_loss_node(t, fused_rgb, clean_vi_rgb, clean_ir_gray);
  if (clean_text_embedding && encoder)
    nodes.vlm = vlm_loss_node(t, fused_rgb, *clean_text_embedding, *encoder);
  else
    nodes.vlm = t.constant(Tensor::scalar(0.0));
  nodes.total = ad::add(t, ad::add(t, nodes.vlm, nodes.color),
                        ad::add(t, nodes.l1, nodes.ssim));
  return nodes;
}

LossReport report_from_nodes(const ad::Tape& t, const LossNodes& nodes) {
  LossReport r;
  r.vlm = t.val(nodes.vlm)[0];
  r.color = t.val(nodes.color)[0];
  r.l1 = t.val(nodes.l1)[0];
  r.ssim = t.val(nodes.ssim)[0];
  r.total = t.val(nodes.total)[0];
  return r;
}

// ---- plain wrappers -------------------------------------------------------------

double vlm_loss(const ImageRgb& fused, const std::string& clean_description,
                const EmbeddingProvider& provider) {
  const Tensor img = provider.encode_image(fused).vector;
  const Tensor txt = provider.encode_text_global(clean_description).vector;
  if (img.numel() != txt.numel())
    throw ProviderError("vlm_loss: embedding dims differ");
  double dot = 0.0, ni = 0.0, nt = 0.0;
  for (std::size_t i = 0; i < img.numel(); ++i) {
    dot += img[i] * txt[i];
    ni += img[i] * img[i];
    nt += txt[i] * txt[i];
  }
  const double denom = std::max(std::sqrt(ni) * std::sqrt(nt), 1e-12);
  return 1.0 - dot / denom;
}

double color_loss(const ImageRgb& fused, const ImageRgb& clean_vi) {
  ad::Tape t;
  return t.val(color_loss_node(t, t.constant(fused.pixels),
                               t.constant(clean_vi.pixels)))[0];
}

double l1_loss(const ImageRgb& fused, const ImageRgb& clean_vi,
               const ImageGray& clean_ir) {
  ad::Tape t;
  return t.val(l1_loss_node(t, t.constant(fused.pixels),
                            t.constant(clean_vi.pixels),
                            t.constant(clean_ir.pixels)))[0];
}

double ssim_loss(const ImageRgb& fused, const ImageRgb& clean_vi,
                 const ImageGray& clean_ir) {
  ad::Tape t;
  return t.val(ssim_loss_node(t, t.constant(fused.pixels),
                              t.constant(clean_vi.pixels),
                              t.constant(clean_ir.pixels)))[0];
}

LossReport total_loss(const ImageRgb& fused, const ImageRgb& clean_vi,
                      const ImageGray& clean_ir,
                      const std::string& clean_description,
                      const EmbeddingProvider& provider, bool vlm_enabled) {
  LossReport r;
  r.vlm = vlm_enabled ? vlm_loss(fused, clean_description, provider) : 0.0;
  r.color = color_loss(fused, clean_vi);
  r.l1 = l1_loss(fused, clean_vi, clean_ir);
  r.ssim = ssim_loss(fused, clean_vi, clean_ir);
  r.total = r.vlm + r.color + r.l1 + r.ssim;
  return r;
}

}  // namespace awm
