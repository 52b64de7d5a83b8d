// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "awmfuse/image_io.hpp"
#include "awmfuse/wavelet.hpp"

namespace awm {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Sigmoid constants shared by the gradient- and wavelet-preservation
// scores (edge-strength branch and orientation branch).
constexpr double kTg = 0.9994, kKg = -15.0, kDg = 0.5;
constexpr double kTa = 0.9879, kKa = -22.0, kDa = 0.8;

Tensor sobel_gx(const Tensor& img) {
  const int h = img.dim(0), w = img.dim(1);
  Tensor out({h, w});
  auto px = [&](int y, int x) {
    return img.at(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1));
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.at(y, x) = px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1) -
                     px(y - 1, x - 1) - 2 * px(y, x - 1) - px(y + 1, x - 1);
  return out;
}

Tensor sobel_gy(const Tensor& img) {
  const int h = img.dim(0), w = img.dim(1);
  Tensor out({h, w});
  auto px = [&](int y, int x) {
    return img.at(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1));
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.at(y, x) = px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1) -
                     px(y - 1, x - 1) - 2 * px(y - 1, x) - px(y - 1, x + 1);
  return out;
}

double preservation_sigmoids(double strength_ratio, double angle_score) {
  const double qg = kTg / (1.0 + std::exp(kKg * (strength_ratio - kDg)));
  const double qa = kTa / (1.0 + std::exp(kKa * (angle_score - kDa)));
  return qg * qa;
}

double min_ratio(double a, double b) {
  if (a == b) return 1.0;
  return a > b ? b / a : a / b;
}

// ---- Q_G: gradient information preservation --------------------------------

struct EdgeField {
  Tensor strength;
  Tensor angle;
};

EdgeField edge_field(const Tensor& img) {
  Tensor gx = sobel_gx(img), gy = sobel_gy(img);
  const int h = img.dim(0), w = img.dim(1);
  EdgeField f{Tensor({h, w}), Tensor({h, w})};
  for (std::size_t i = 0; i < f.strength.numel(); ++i) {
    f.strength[i] = std::hypot(gx[i], gy[i]);
    f.angle[i] = std::atan(gy[i] / (gx[i] + 1e-12));
  }
  return f;
}

double edge_preservation(const EdgeField& src, const EdgeField& fused,
                         std::size_t i) {
  const double ratio = min_ratio(src.strength[i], fused.strength[i]);
  const double angle =
      1.0 - std::fabs(src.angle[i] - fused.angle[i]) / (kPi / 2.0);
  return preservation_sigmoids(ratio, angle);
}

double metric_qg(const Tensor& a, const Tensor& b, const Tensor& f) {
  const EdgeField ea = edge_field(a), eb = edge_field(b), ef = edge_field(f);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double wa = ea.strength[i], wb = eb.strength[i];
    num += edge_preservation(ea, ef, i) * wa + edge_preservation(eb, ef, i) * wb;
    den += wa + wb;
  }
  return den > 0.0 ? num / den : 0.0;
}

// ---- Q_M: two-level wavelet edge preservation --------------------------------

struct BandField {
  Tensor magnitude;
  Tensor angle;
};

BandField band_field(const std::array<Tensor, 3>& bands) {
  const Tensor& lh = bands[0];
  const Tensor& hl = bands[1];
  const Tensor& hh = bands[2];
  BandField f{Tensor({lh.dim(1), lh.dim(2)}), Tensor({lh.dim(1), lh.dim(2)})};
  for (std::size_t i = 0; i < f.magnitude.numel(); ++i) {
    f.magnitude[i] =
        std::sqrt(lh[i] * lh[i] + hl[i] * hl[i] + hh[i] * hh[i]);
    f.angle[i] = std::atan(lh[i] / (hl[i] + 1e-12));
  }
  return f;
}

double band_preservation_score(const BandField& a, const BandField& b,
                               const BandField& f) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.magnitude.numel(); ++i) {
    const double ra = min_ratio(a.magnitude[i], f.magnitude[i]);
    const double rb = min_ratio(b.magnitude[i], f.magnitude[i]);
    const double aa = 1.0 - std::fabs(a.angle[i] - f.angle[i]) / (kPi / 2.0);
    const double ab = 1.0 - std::fabs(b.angle[i] - f.angle[i]) / (kPi / 2.0);
    num += preservation_sigmoids(ra, aa) * a.magnitude[i] +
           preservation_sigmoids(rb, ab) * b.magnitude[i];
    den += a.magnitude[i] + b.magnitude[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

double metric_qm(const Tensor& a, const Tensor& b, const Tensor& f) {
  // Crop to a multiple of 4 so two Haar levels exist.
  const int h = (a.dim(0) / 4) * 4, w = (a.dim(1) / 4) * 4;
  if (h < 4 || w < 4) return 0.0;
  auto prep = [&](const Tensor& img) {
    Tensor chw({1, h, w});
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) chw.at(0, y, x) = img.at(y, x);
    return haar_dwt2(chw, 2);
  };
  const WaveletStack sa = prep(a), sb = prep(b), sf = prep(f);
  double qm = 0.0;
  for (int level = 0; level < 2; ++level) {
    const std::size_t l = static_cast<std::size_t>(level);
    qm += band_preservation_score(band_field(sa.details[l]),
                                  band_field(sb.details[l]),
                                  band_field(sf.details[l]));
  }
  return qm;
}

// ---- Q_S: saliency-weighted structural index ----------------------------------

// Integral-image window statistics for 8x8 sliding windows.
struct Integral {
  int h = 0, w = 0;
  std::vector<double> s;
  explicit Integral(const Tensor& img) : h(img.dim(0)), w(img.dim(1)) {
    s.assign(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
    for (int y = 0; y < h; ++y) {
      double row = 0.0;
      for (int x = 0; x < w; ++x) {
        row += img.at(y, x);
        s[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] =
            s[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
      }
    }
  }
  double sum(int y, int x, int n) const {
    const std::size_t stride = static_cast<std::size_t>(w + 1);
    return s[(y + n) * stride + x + n] - s[y * stride + x + n] -
           s[(y + n) * stride + x] + s[y * stride + x];
  }
};

Tensor hadamard(const Tensor& x, const Tensor& y) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= y[i];
  return out;
}

double metric_qs(const Tensor& a, const Tensor& b, const Tensor& f) {
  constexpr int kWin = 8;
  const int h = a.dim(0), w = a.dim(1);
  if (h < kWin || w < kWin) return 0.0;
  const Integral ia(a), ib(b), iff(f);
  const Integral iaa(hadamard(a, a)), ibb(hadamard(b, b)), iffff(hadamard(f, f));
  const Integral iaf(hadamard(a, f)), ibf(hadamard(b, f));
  const double n = double(kWin) * kWin;

  // Sample statistics (N-1 normalization) per window, UIQI-style index.
  auto window_q0_and_var = [&](const Integral& ix, const Integral& ixx,
                               const Integral& ixf, int y, int x, double& q0,
                               double& var_x) {
    const double sx = ix.sum(y, x, kWin), sf = iff.sum(y, x, kWin);
    const double mx = sx / n, mf = sf / n;
    const double vx = (ixx.sum(y, x, kWin) - n * mx * mx) / (n - 1.0);
    const double vf = (iffff.sum(y, x, kWin) - n * mf * mf) / (n - 1.0);
    const double cxf = (ixf.sum(y, x, kWin) - n * mx * mf) / (n - 1.0);
    var_x = std::max(vx, 0.0);
    const double den = (vx + vf) * (mx * mx + mf * mf);
    q0 = den > 1e-12 ? (4.0 * cxf * mx * mf) / den : 0.0;
  };

  double acc = 0.0;
  std::size_t count = 0;
  for (int y = 0; y + kWin <= h; ++y)
    for (int x = 0; x + kWin <= w; ++x) {
      double q0a, q0b, va, vb;
      window_q0_and_var(ia, iaa, iaf, y, x, q0a, va);
      window_q0_and_var(ib, ibb, ibf, y, x, q0b, vb);
      const double lambda = (va + vb) > 1e-12 ? va / (va + vb) : 0.5;
      acc += lambda * q0a + (1.0 - lambda) * q0b;
      ++count;
    }
  const double qs = count ? acc / double(count) : 0.0;
  return std::clamp(qs, 0.0, 1.0);
}

// ---- Q_CV: CSF-weighted perceptual distortion -----------------------------------

void fft_radix2(std::vector<std::complex<double>>& v, bool inverse) {
  const std::size_t n = v.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(v[i], v[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * kPi / double(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = v[i + k];
        const std::complex<double> t = v[i + k + len / 2] * w;
        v[i + k] = u + t;
        v[i + k + len / 2] = u - t;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : v) x /= double(n);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Mannos-Sakrison contrast sensitivity, radial frequency in cycles per
// degree assuming 32 pixels per degree.
double csf(double cycles_per_degree) {
  const double f = 0.114 * cycles_per_degree;
  return 2.6 * (0.0192 + f) * std::exp(-std::pow(f, 1.1));
}

Tensor csf_filter(const Tensor& diff) {
  const int h = diff.dim(0), w = diff.dim(1);
  const std::size_t ph = next_pow2(static_cast<std::size_t>(h));
  const std::size_t pw = next_pow2(static_cast<std::size_t>(w));
  std::vector<std::complex<double>> grid(ph * pw);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      grid[static_cast<std::size_t>(y) * pw + x] = diff.at(y, x);

  std::vector<std::complex<double>> row(pw), col(ph);
  for (std::size_t y = 0; y < ph; ++y) {
    std::copy_n(grid.begin() + y * pw, pw, row.begin());
    fft_radix2(row, false);
    std::copy_n(row.begin(), pw, grid.begin() + y * pw);
  }
  for (std::size_t x = 0; x < pw; ++x) {
    for (std::size_t y = 0; y < ph; ++y) col[y] = grid[y * pw + x];
    fft_radix2(col, false);
    for (std::size_t y = 0; y < ph; ++y) grid[y * pw + x] = col[y];
  }
  for (std::size_t y = 0; y < ph; ++y) {
    const double fy =
        (y <= ph / 2 ? double(y) : double(y) - double(ph)) / double(ph);
    for (std::size_t x = 0; x < pw; ++x) {
      const double fx =
          (x <= pw / 2 ? double(x) : double(x) - double(pw)) / double(pw);
      grid[y * pw + x] *= csf(32.0 * std::hypot(fx, fy));
    }
  }
  for (std::size_t x = 0; x < pw; ++x) {
    for (std::size_t y = 0; y < ph; ++y) col[y] = grid[y * pw + x];
    fft_radix2(col, true);
    for (std::size_t y = 0; y < ph; ++y) grid[y * pw + x] = col[y];
  }
  Tensor out({h, w});
  for (std::size_t y = 0; y < ph; ++y) {
    std::copy_n(grid.begin() + y * pw, pw, row.begin());
    fft_radix2(row, true);
    if (y < static_cast<std::size_t>(h))
      for (int x = 0; x < w; ++x) out.at(static_cast<int>(y), x) = row[x].real();
  }
  return out;
}

double metric_qcv(const Tensor& a, const Tensor& b, const Tensor& f) {
  constexpr int kRegion = 16;
  const int h = a.dim(0), w = a.dim(1);
  const int ny = h / kRegion, nx = w / kRegion;
  if (ny < 1 || nx < 1) return 0.0;

  const EdgeField ea = edge_field(a), eb = edge_field(b);
  Tensor da({h, w}), db({h, w});
  for (std::size_t i = 0; i < da.numel(); ++i) {
    da[i] = a[i] - f[i];
    db[i] = b[i] - f[i];
  }
  const Tensor fa = csf_filter(da), fb = csf_filter(db);

  double num = 0.0, den = 0.0;
  for (int by = 0; by < ny; ++by)
    for (int bx = 0; bx < nx; ++bx) {
      double la = 0.0, lb = 0.0, dda = 0.0, ddb = 0.0;
      for (int y = by * kRegion; y < (by + 1) * kRegion; ++y)
        for (int x = bx * kRegion; x < (bx + 1) * kRegion; ++x) {
          la += ea.strength.at(y, x) * ea.strength.at(y, x);
          lb += eb.strength.at(y, x) * eb.strength.at(y, x);
          dda += fa.at(y, x) * fa.at(y, x);
          ddb += fb.at(y, x) * fb.at(y, x);
        }
      const double n = double(kRegion) * kRegion;
      num += la * (dda / n) + lb * (ddb / n);
      den += la + lb;
    }
  return den > 0.0 ? num / den : 0.0;
}

// ---- SSIM ------------------------------------------------------------------------

Tensor gauss_valid(const Tensor& img, int win, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(win));
  const double c = (win - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < win; ++i) {
    k[static_cast<std::size_t>(i)] =
        std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= sum;

  const int h = img.dim(0), w = img.dim(1);
  const int ow = w - win + 1, oh = h - win + 1;
  Tensor horiz({h, ow});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < win; ++i) acc += k[static_cast<std::size_t>(i)] * img.at(y, x + i);
      horiz.at(y, x) = acc;
    }
  Tensor out({oh, ow});
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < win; ++i) acc += k[static_cast<std::size_t>(i)] * horiz.at(y + i, x);
      out.at(y, x) = acc;
    }
  return out;
}

double ssim_pair(const Tensor& x, const Tensor& y, double dynamic_range) {
  int win = std::min({11, x.dim(0), x.dim(1)});
  if (win % 2 == 0) --win;
  if (win < 3) throw DimMismatch("ssim: image too small");
  const double c1 = 0.01 * 0.01 * dynamic_range * dynamic_range;
  const double c2 = 0.03 * 0.03 * dynamic_range * dynamic_range;
  const double sigma = 1.5;

  const Tensor mx = gauss_valid(x, win, sigma);
  const Tensor my = gauss_valid(y, win, sigma);
  const Tensor mxx = gauss_valid(hadamard(x, x), win, sigma);
  const Tensor myy = gauss_valid(hadamard(y, y), win, sigma);
  const Tensor mxy = gauss_valid(hadamard(x, y), win, sigma);

  double acc = 0.0;
  for (std::size_t i = 0; i < mx.numel(); ++i) {
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cxy = mxy[i] - mx[i] * my[i];
    const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
    acc += num / den;
  }
  return acc / double(mx.numel());
}

// ---- VIF (pixel domain) --------------------------------------------------------

Tensor decimate2(const Tensor& img) {
  const int h = img.dim(0) / 2, w = img.dim(1) / 2;
  Tensor out({h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(y, x) = img.at(2 * y, 2 * x);
  return out;
}

double vifp_pair(Tensor ref, Tensor dist) {
  constexpr double kSigmaNsq = 2.0;
  double num = 0.0, den = 0.0;
  for (int scale = 1; scale <= 4; ++scale) {
    const int win = (1 << (4 - scale + 1)) + 1;  // 17, 9, 5, 3
    const double sigma = win / 5.0;
    if (scale > 1) {
      if (ref.dim(0) < win || ref.dim(1) < win) break;
      ref = decimate2(gauss_valid(ref, win, sigma));
      dist = decimate2(gauss_valid(dist, win, sigma));
    }
    if (ref.dim(0) < win || ref.dim(1) < win) break;
    const Tensor mu1 = gauss_valid(ref, win, sigma);
    const Tensor mu2 = gauss_valid(dist, win, sigma);
    const Tensor m11 = gauss_valid(hadamard(ref, ref), win, sigma);
    const Tensor m22 = gauss_valid(hadamard(dist, dist), win, sigma);
    const Tensor m12 = gauss_valid(hadamard(ref, dist), win, sigma);
    for (std::size_t i = 0; i < mu1.numel(); ++i) {
      double s1 = std::max(m11[i] - mu1[i] * mu1[i], 0.0);
      double s2 = std::max(m22[i] - mu2[i] * mu2[i], 0.0);
      double s12 = m12[i] - mu1[i] * mu2[i];
      double g = s12 / (s1 + 1e-10);
      double sv = s2 - g * s12;
      if (s1 < 1e-10) {
        g = 0.0;
        sv = s2;
        s1 = 0.0;
      }
      if (s2 < 1e-10) {
        g = 0.0;
        sv = 0.0;
      }
      if (g < 0.0) {
        sv = s2;
        g = 0.0;
      }
      if (sv < 1e-10) sv = 1e-10;
      num += std::log10(1.0 + g * g * s1 / (sv + kSigmaNsq));
      den += std::log10(1.0 + s1 / kSigmaNsq);
    }
  }
  return den > 0.0 ? num / den : 0.0;
}

// ---- SCD ------------------------------------------------------------------------

double pearson(const Tensor& x, const Tensor& y) {
  const double n = double(x.numel());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 1e-12 || syy <= 1e-12) return 0.0;  // zero-variance rule
  return sxy / std::sqrt(sxx * syy);
}

double metric_scd(const Tensor& a, const Tensor& b, const Tensor& f) {
  Tensor fa({a.dim(0), a.dim(1)}), fb({a.dim(0), a.dim(1)});
  for (std::size_t i = 0; i < fa.numel(); ++i) {
    fa[i] = f[i] - a[i];
    fb[i] = f[i] - b[i];
  }
  return pearson(fa, b) + pearson(fb, a);
}

}  // namespace

Tensor luminance255(const ImageRgb& img) {
  const Tensor y = luminance(img);
  Tensor out({img.height(), img.width()});
  for (std::size_t i = 0; i < out.numel(); ++i)
    out[i] = std::round(std::clamp(y[i], 0.0, 1.0) * 255.0);
  return out;
}

Tensor luminance255(const ImageGray& img) {
  Tensor out({img.height(), img.width()});
  for (std::size_t i = 0; i < out.numel(); ++i)
    out[i] = std::round(std::clamp(img.pixels[i], 0.0, 1.0) * 255.0);
  return out;
}

double ssim_metric(const Tensor& x, const Tensor& y) {
  require_same_shape(x, y, "ssim_metric");
  return ssim_pair(x, y, 255.0);
}

MetricReport evaluate(const ImageRgb& fused, const ImageRgb& vi,
                      const ImageGray& ir) {
  if (fused.height() != vi.height() || fused.width() != vi.width() ||
      fused.height() != ir.height() || fused.width() != ir.width())
    throw ShapeMismatch("evaluate: images must share dimensions");
  const Tensor f = luminance255(fused);
  const Tensor a = luminance255(vi);
  const Tensor b = luminance255(ir);

  MetricReport r;
  r.qg = metric_qg(a, b, f);
  r.qm = metric_qm(a, b, f);
  r.qs = metric_qs(a, b, f);
  r.qcv = metric_qcv(a, b, f);
  r.vif = 0.5 * (vifp_pair(a, f) + vifp_pair(b, f));
  r.ssim = 0.5 * (ssim_pair(f, a, 255.0) + ssim_pair(f, b, 255.0));
  r.scd = metric_scd(a, b, f);
  return r;
}

BatchEvaluation batch_evaluate(const std::string& dir_fused,
                               const std::string& dir_vi,
                               const std::string& dir_ir) {
  namespace fs = std::filesystem;
  std::vector<std::string> names;
  if (fs::is_directory(dir_fused))
    for (const auto& entry : fs::directory_iterator(dir_fused))
      if (entry.path().extension() == ".png")
        names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  if (names.empty())
    throw EmptyDataset("no PNG images under " + dir_fused);

  BatchEvaluation batch;
  MetricReport sum;
  for (const std::string& name : names) {
    const std::string vi_path = dir_vi + "/" + name;
    const std::string ir_path = dir_ir + "/" + name;
    if (!fs::exists(vi_path))
      throw MissingCounterpart("missing visible image: " + vi_path);
    if (!fs::exists(ir_path))
      throw MissingCounterpart("missing infrared image: " + ir_path);
    const ImageRgb fused = load_image_rgb(dir_fused + "/" + name);
    const ImageRgb vi = load_image_rgb(vi_path);
    const ImageGray ir = load_image_gray(ir_path);
    const MetricReport r = evaluate(fused, vi, ir);
    sum.qg += r.qg;
    sum.qm += r.qm;
    sum.qs += r.qs;
    sum.qcv += r.qcv;
    sum.vif += r.vif;
    sum.ssim += r.ssim;
    sum.scd += r.scd;
    batch.rows.emplace_back(name.substr(0, name.size() - 4), r);
  }
  const double n = double(batch.rows.size());
  batch.mean = {sum.qg / n, sum.qm / n, sum.qs / n, sum.qcv / n,
                sum.vif / n, sum.ssim / n, sum.scd / n};
  return batch;
}

std::string metrics_csv(const BatchEvaluation& batch) {
  std::string out = "id,qg,qm,qs,qcv,vif,ssim,scd\n";
  char line[256];
  auto append = [&](const std::string& id, const MetricReport& r) {
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  id.c_str(), r.qg, r.qm, r.qs, r.qcv, r.vif, r.ssim, r.scd);
    out += line;
  };
  for (const auto& [id, report] : batch.rows) append(id, report);
  append("mean", batch.mean);
  return out;
}

void write_metrics_csv(const BatchEvaluation& batch, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write CSV: " + path);
  out << metrics_csv(batch);
  if (!out) throw IoError("cannot write CSV: " + path);
}

}  // namespace awm
