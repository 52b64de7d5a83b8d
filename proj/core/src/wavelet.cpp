// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/wavelet.hpp"

#include "awmfuse/kernels.hpp"

namespace awm {

Tensor haar_analysis_packed(const Tensor& x) {
  if (x.rank() != 3) throw ShapeMismatch("haar: expects [C,H,W]");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 != 0 || w % 2 != 0)
    throw IndivisibleSpatialSize("haar: odd spatial size " + x.shape_str());
  const int hh = h / 2, hw = w / 2;
  Tensor out({4 * c, hh, hw});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < hh; ++y)
      for (int xw = 0; xw < hw; ++xw) {
        const double a = x.at(ch, 2 * y, 2 * xw);
        const double b = x.at(ch, 2 * y, 2 * xw + 1);
        const double cc = x.at(ch, 2 * y + 1, 2 * xw);
        const double d = x.at(ch, 2 * y + 1, 2 * xw + 1);
        out.at(ch, y, xw) = 0.5 * (a + b + cc + d);           // LL
        out.at(c + ch, y, xw) = 0.5 * (a + b - cc - d);       // LH (vertical)
        out.at(2 * c + ch, y, xw) = 0.5 * (a - b + cc - d);   // HL (horizontal)
        out.at(3 * c + ch, y, xw) = 0.5 * (a - b - cc + d);   // HH (diagonal)
      }
  return out;
}

Tensor haar_synthesis_packed(const Tensor& x) {
  if (x.rank() != 3 || x.dim(0) % 4 != 0)
    throw ShapeMismatch("haar synthesis: expects [4C,h,w]");
  const int c = x.dim(0) / 4, hh = x.dim(1), hw = x.dim(2);
  Tensor out({c, 2 * hh, 2 * hw});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < hh; ++y)
      for (int xw = 0; xw < hw; ++xw) {
        const double ll = x.at(ch, y, xw);
        const double lh = x.at(c + ch, y, xw);
        const double hl = x.at(2 * c + ch, y, xw);
        const double hhb = x.at(3 * c + ch, y, xw);
        out.at(ch, 2 * y, 2 * xw) = 0.5 * (ll + lh + hl + hhb);
        out.at(ch, 2 * y, 2 * xw + 1) = 0.5 * (ll + lh - hl - hhb);
        out.at(ch, 2 * y + 1, 2 * xw) = 0.5 * (ll - lh + hl - hhb);
        out.at(ch, 2 * y + 1, 2 * xw + 1) = 0.5 * (ll - lh - hl + hhb);
      }
  return out;
}

Tensor selective_scan_forward(const Tensor& x, const Tensor& a,
                              const Tensor& b, const Tensor& c,
                              const Tensor& d, std::vector<double>* h_store) {
  if (x.rank() != 2) throw DimMismatch("selective_scan: x must be [L,C]");
  const int l = x.dim(0), cn = x.dim(1);
  if (a.rank() != 2 || a.dim(0) != cn || !a.same_shape(b) || !a.same_shape(c) ||
      d.numel() != static_cast<std::size_t>(cn))
    throw DimMismatch("selective_scan: parameter shapes inconsistent");
  const int n = a.dim(1);

  Tensor out({l, cn});
  if (h_store) h_store->assign(static_cast<std::size_t>(l) * cn * n, 0.0);
  std::vector<double> h(static_cast<std::size_t>(n));
  for (int ch = 0; ch < cn; ++ch) {
    std::fill(h.begin(), h.end(), 0.0);
    const double* ac = a.data() + static_cast<std::size_t>(ch) * n;
    const double* bc = b.data() + static_cast<std::size_t>(ch) * n;
    const double* cc = c.data() + static_cast<std::size_t>(ch) * n;
    const double dc = d[ch];
    for (int t = 0; t < l; ++t) {
      const double xt = x[static_cast<std::size_t>(t) * cn + ch];
      double yt = dc * xt;
      for (int k = 0; k < n; ++k) {
        h[k] = ac[k] * h[k] + bc[k] * xt;
        yt += cc[k] * h[k];
      }
      out[static_cast<std::size_t>(t) * cn + ch] = yt;
      if (h_store)
        std::copy(h.begin(), h.end(),
                  h_store->data() + (static_cast<std::size_t>(t) * cn + ch) * n);
    }
  }
  return out;
}

WaveletStack haar_dwt2(const Tensor& f, int levels) {
  if (levels < 1) throw DimMismatch("haar_dwt2: levels must be >= 1");
  const int c = f.dim(0);
  WaveletStack stack;
  stack.levels = levels;
  Tensor cur = f;
  for (int l = 0; l < levels; ++l) {
    if (cur.dim(1) % 2 != 0 || cur.dim(2) % 2 != 0)
      throw IndivisibleSpatialSize("haar_dwt2: size not divisible by 2^levels");
    Tensor packed = haar_analysis_packed(cur);
    const int hh = packed.dim(1), hw = packed.dim(2);
    std::array<Tensor, 3> bands;
    for (int bnd = 0; bnd < 3; ++bnd) {
      Tensor band({c, hh, hw});
      const std::size_t plane = static_cast<std::size_t>(hh) * hw;
      std::copy(packed.data() + (bnd + 1) * c * plane,
                packed.data() + (bnd + 2) * c * plane, band.data());
      bands[bnd] = std::move(band);
    }
    stack.details.push_back(std::move(bands));
    Tensor ll({c, hh, hw});
    std::copy(packed.data(), packed.data() + ll.numel(), ll.data());
    cur = std::move(ll);
  }
  stack.ll = std::move(cur);
  return stack;
}

Tensor haar_idwt2(const WaveletStack& w) {
  Tensor cur = w.ll;
  const int c = cur.dim(0);
  for (int l = w.levels - 1; l >= 0; --l) {
    const auto& bands = w.details[static_cast<std::size_t>(l)];
    const int hh = cur.dim(1), hw = cur.dim(2);
    Tensor packed({4 * c, hh, hw});
    const std::size_t plane = static_cast<std::size_t>(hh) * hw;
    std::copy(cur.data(), cur.data() + cur.numel(), packed.data());
    for (int bnd = 0; bnd < 3; ++bnd)
      std::copy(bands[bnd].data(), bands[bnd].data() + bands[bnd].numel(),
                packed.data() + (bnd + 1) * c * plane);
    cur = haar_synthesis_packed(packed);
  }
  return cur;
}

double stack_energy(const WaveletStack& w) {
  double e = 0.0;
  for (double v : w.ll.vec()) e += v * v;
  for (const auto& bands : w.details)
    for (const auto& band : bands)
      for (double v : band.vec()) e += v * v;
  return e;
}

}  // namespace awm
