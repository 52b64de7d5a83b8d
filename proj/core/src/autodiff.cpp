// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#include "awmfuse/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "awmfuse/kernels.hpp"

namespace awm::ad {

// ---- tape ----------------------------------------------------------------

Value Tape::constant(Tensor t) { return make_node(std::move(t)); }

Value Tape::leaf(Tensor t, Tensor* external_grad) {
  Value v = make_node(std::move(t));
  nodes_[v.idx]->external_grad = external_grad;
  return v;
}

Value Tape::make_node(Tensor val, BackwardFn back) {
  auto node = std::make_unique<Node>();
  node->val = std::move(val);
  node->back = std::move(back);
  nodes_.push_back(std::move(node));
  return Value{static_cast<int>(nodes_.size()) - 1};
}

void Tape::set_backward(Value v, BackwardFn back) {
  nodes_[v.idx]->back = std::move(back);
}

Tensor& Tape::grad_mut(Value v) {
  Node& n = *nodes_[v.idx];
  if (n.grad.empty()) n.grad = Tensor(n.val.shape());
  return n.grad;
}

void Tape::accumulate(Value v, const Tensor& delta) {
  Tensor& g = grad_mut(v);
  const double* src = delta.data();
  double* dst = g.data();
  const std::size_t n = g.numel();
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

void Tape::accumulate_at(Value v, std::size_t flat_index, double delta) {
  grad_mut(v)[flat_index] += delta;
}

Tensor Tape::grad_of(Value v) const {
  const Node& n = *nodes_[v.idx];
  if (n.grad.empty()) return Tensor(n.val.shape());
  return n.grad;
}

void Tape::backward(Value root) {
  if (!root.valid() || val(root).numel() != 1)
    throw DimMismatch("backward root must be a scalar");
  grad_mut(root)[0] += 1.0;
  for (int i = root.idx; i >= 0; --i) {
    Node& n = *nodes_[i];
    if (n.grad.empty()) continue;
    if (n.back) n.back(*this);
    if (n.external_grad) {
      double* dst = n.external_grad->data();
      const double* src = n.grad.data();
      for (std::size_t k = 0; k < n.grad.numel(); ++k) dst[k] += src[k];
    }
  }
}

// ---- elementwise ----------------------------------------------------------

Value add(Tape& t, Value a, Value b) {
  require_same_shape(t.val(a), t.val(b), "add");
  Tensor out = t.val(a);
  const Tensor& bv = t.val(b);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bv[i];
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [a, b, y](Tape& t) {
    t.accumulate(a, t.grad(y));
    t.accumulate(b, t.grad(y));
  });
  return y;
}

Value sub(Tape& t, Value a, Value b) {
  require_same_shape(t.val(a), t.val(b), "sub");
  Tensor out = t.val(a);
  const Tensor& bv = t.val(b);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= bv[i];
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [a, b, y](Tape& t) {
    const Tensor& g = t.grad(y);
    t.accumulate(a, g);
    Tensor& gb = t.grad_mut(b);
    for (std::size_t i = 0; i < g.numel(); ++i) gb[i] -= g[i];
  });
  return y;
}

Value mul(Tape& t, Value a, Value b) {
  require_same_shape(t.val(a), t.val(b), "mul");
  Tensor out = t.val(a);
  const Tensor& bv = t.val(b);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [a, b, y](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i] * bv[i];
      gb[i] += g[i] * av[i];
    }
  });
  return y;
}

Value div(Tape& t, Value a, Value b) {
  require_same_shape(t.val(a), t.val(b), "div");
  Tensor out = t.val(a);
  const Tensor& bv = t.val(b);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] /= bv[i];
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [a, b, y](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& yv = t.val(y);
    const Tensor& bv = t.val(b);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i] / bv[i];
      gb[i] -= g[i] * yv[i] / bv[i];
    }
  });
  return y;
}

Value scale(Tape& t, Value a, double s) {
  Tensor out = t.val(a);
  for (double& v : out.vec()) v *= s;
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [a, s, y](Tape& t) {
    const Tensor& g = t.grad(y);
    Tensor& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += s * g[i];
  });
  return y;
}

Value add_scalar(Tape& t, Value a, double s) {
  Tensor out = t.val(a);
  for (double& v : out.vec()) v += s;
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [a, y](Tape& t) { t.accumulate(a, t.grad(y)); });
  return y;
}

Value neg_of(Tape& t, Value x) { return scale(t, x, -1.0); }

namespace {
double sigmoid_scalar(double x) {
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Value silu(Tape& t, Value x) {
  Tensor out = t.val(x);
  for (double& v : out.vec()) v *= sigmoid_scalar(v);
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& xv = t.val(x);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const double s = sigmoid_scalar(xv[i]);
      gx[i] += g[i] * (s * (1.0 + xv[i] * (1.0 - s)));
    }
  });
  return y;
}

Value sigmoid(Tape& t, Value x) {
  Tensor out = t.val(x);
  for (double& v : out.vec()) v = sigmoid_scalar(v);
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& yv = t.val(y);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.numel(); ++i)
      gx[i] += g[i] * yv[i] * (1.0 - yv[i]);
  });
  return y;
}

Value softplus(Tape& t, Value x) {
  Tensor out = t.val(x);
  for (double& v : out.vec())
    v = v > 30.0 ? v : std::log1p(std::exp(v));
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& xv = t.val(x);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.numel(); ++i)
      gx[i] += g[i] * sigmoid_scalar(xv[i]);
  });
  return y;
}

Value exp_of(Tape& t, Value x) {
  Tensor out = t.val(x);
  for (double& v : out.vec()) v = std::exp(v);
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& yv = t.val(y);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * yv[i];
  });
  return y;
}

Value abs_of(Tape& t, Value x) {
  Tensor out = t.val(x);
  for (double& v : out.vec()) v = std::fabs(v);
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& xv = t.val(x);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.numel(); ++i)
      gx[i] += g[i] * (xv[i] > 0 ? 1.0 : (xv[i] < 0 ? -1.0 : 0.0));
  });
  return y;
}

Value square(Tape& t, Value x) {
  Tensor out = t.val(x);
  for (double& v : out.vec()) v *= v;
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& xv = t.val(x);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += 2.0 * g[i] * xv[i];
  });
  return y;
}

// ---- reductions ------------------------------------------------------------

Value sum_all(Tape& t, Value x) {
  Value y = t.make_node(Tensor::scalar(t.val(x).sum()));
  t.set_backward(y, [x, y](Tape& t) {
    const double g = t.grad(y)[0];
    Tensor& gx = t.grad_mut(x);
    for (double& v : gx.vec()) v += g;
  });
  return y;
}

Value mean_all(Tape& t, Value x) {
  const double n = static_cast<double>(t.val(x).numel());
  Value y = t.make_node(Tensor::scalar(t.val(x).sum() / n));
  t.set_backward(y, [x, y, n](Tape& t) {
    const double g = t.grad(y)[0] / n;
    Tensor& gx = t.grad_mut(x);
    for (double& v : gx.vec()) v += g;
  });
  return y;
}

Value dot(Tape& t, Value a, Value b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (av.numel() != bv.numel()) throw DimMismatch("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < av.numel(); ++i) s += av[i] * bv[i];
  Value y = t.make_node(Tensor::scalar(s));
  t.set_backward(y, [a, b, y](Tape& t) {
    const double g = t.grad(y)[0];
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    for (std::size_t i = 0; i < av.numel(); ++i) {
      ga[i] += g * bv[i];
      gb[i] += g * av[i];
    }
  });
  return y;
}

Value l2_normalize(Tape& t, Value v) {
  const Tensor& xv = t.val(v);
  double nsq = 0.0;
  for (std::size_t i = 0; i < xv.numel(); ++i) nsq += xv[i] * xv[i];
  const double n = std::max(std::sqrt(nsq), 1e-12);
  Tensor out = xv;
  for (double& o : out.vec()) o /= n;
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [v, y, n](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& yv = t.val(y);
    double gy = 0.0;
    for (std::size_t i = 0; i < g.numel(); ++i) gy += g[i] * yv[i];
    Tensor& gx = t.grad_mut(v);
    for (std::size_t i = 0; i < g.numel(); ++i)
      gx[i] += (g[i] - yv[i] * gy) / n;
  });
  return y;
}

Value mean_rows(Tape& t, Value x) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 2) throw DimMismatch("mean_rows expects [M,N]");
  const int m = xv.dim(0), n = xv.dim(1);
  Tensor out({n});
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) out[c] += xv.at(r, c);
  for (double& v : out.vec()) v /= m;
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y, m, n](Tape& t) {
    const Tensor& g = t.grad(y);
    Tensor& gx = t.grad_mut(x);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) gx.at(r, c) += g[c] / m;
  });
  return y;
}

// ---- linear algebra ---------------------------------------------------------

Value linear(Tape& t, Value x, Value w, Value bias) {
  const Tensor& xv = t.val(x);
  const Tensor& wv = t.val(w);
  if (wv.rank() != 2) throw DimMismatch("linear: weight must be [N,K]");
  const bool vec_in = xv.rank() == 1;
  const int m = vec_in ? 1 : xv.dim(0);
  const int k = vec_in ? xv.dim(0) : xv.dim(1);
  const int n = wv.dim(0);
  if (wv.dim(1) != k) throw DimMismatch("linear: K mismatch");
  if (bias.valid() && t.val(bias).numel() != static_cast<std::size_t>(n))
    throw DimMismatch("linear: bias size mismatch");

  Tensor out(vec_in ? std::vector<int>{n} : std::vector<int>{m, n});
  for (int r = 0; r < m; ++r) {
    const double* xi = xv.data() + static_cast<std::size_t>(r) * k;
    double* oi = out.data() + static_cast<std::size_t>(r) * n;
    for (int c = 0; c < n; ++c) {
      const double* wc = wv.data() + static_cast<std::size_t>(c) * k;
      double acc = bias.valid() ? t.val(bias)[c] : 0.0;
      for (int i = 0; i < k; ++i) acc += xi[i] * wc[i];
      oi[c] = acc;
    }
  }
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, w, bias, y, m, k, n](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& xv = t.val(x);
    const Tensor& wv = t.val(w);
    Tensor& gx = t.grad_mut(x);
    Tensor& gw = t.grad_mut(w);
    for (int r = 0; r < m; ++r) {
      const double* gi = g.data() + static_cast<std::size_t>(r) * n;
      const double* xi = xv.data() + static_cast<std::size_t>(r) * k;
      double* gxi = gx.data() + static_cast<std::size_t>(r) * k;
      for (int c = 0; c < n; ++c) {
        const double gv = gi[c];
        if (gv == 0.0) continue;
        const double* wc = wv.data() + static_cast<std::size_t>(c) * k;
        double* gwc = gw.data() + static_cast<std::size_t>(c) * k;
        for (int i = 0; i < k; ++i) {
          gxi[i] += gv * wc[i];
          gwc[i] += gv * xi[i];
        }
      }
    }
    if (bias.valid()) {
      Tensor& gb = t.grad_mut(bias);
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c)
          gb[c] += g[static_cast<std::size_t>(r) * n + c];
    }
  });
  return y;
}

namespace {

Value matmul_impl(Tape& t, Value a, Value b, bool trans_b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (av.rank() != 2 || bv.rank() != 2) throw DimMismatch("matmul: rank != 2");
  const int m = av.dim(0), k = av.dim(1);
  const int n = trans_b ? bv.dim(0) : bv.dim(1);
  const int kb = trans_b ? bv.dim(1) : bv.dim(0);
  if (kb != k) throw DimMismatch("matmul: inner dim mismatch");

  Tensor out({m, n});
  for (int r = 0; r < m; ++r) {
    const double* ai = av.data() + static_cast<std::size_t>(r) * k;
    double* oi = out.data() + static_cast<std::size_t>(r) * n;
    if (trans_b) {
      for (int c = 0; c < n; ++c) {
        const double* bc = bv.data() + static_cast<std::size_t>(c) * k;
        double acc = 0.0;
        for (int i = 0; i < k; ++i) acc += ai[i] * bc[i];
        oi[c] = acc;
      }
    } else {
      for (int i = 0; i < k; ++i) {
        const double aik = ai[i];
        if (aik == 0.0) continue;
        const double* bi = bv.data() + static_cast<std::size_t>(i) * n;
        for (int c = 0; c < n; ++c) oi[c] += aik * bi[c];
      }
    }
  }
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [a, b, y, m, k, n, trans_b](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    for (int r = 0; r < m; ++r) {
      const double* gi = g.data() + static_cast<std::size_t>(r) * n;
      const double* ai = av.data() + static_cast<std::size_t>(r) * k;
      double* gai = ga.data() + static_cast<std::size_t>(r) * k;
      for (int c = 0; c < n; ++c) {
        const double gv = gi[c];
        if (gv == 0.0) continue;
        if (trans_b) {
          const double* bc = bv.data() + static_cast<std::size_t>(c) * k;
          double* gbc = gb.data() + static_cast<std::size_t>(c) * k;
          for (int i = 0; i < k; ++i) {
            gai[i] += gv * bc[i];
            gbc[i] += gv * ai[i];
          }
        } else {
          for (int i = 0; i < k; ++i) {
            gai[i] += gv * bv[static_cast<std::size_t>(i) * n + c];
            gb[static_cast<std::size_t>(i) * n + c] += gv * ai[i];
          }
        }
      }
    }
  });
  return y;
}

}  // namespace

Value matmul(Tape& t, Value a, Value b) { return matmul_impl(t, a, b, false); }
Value matmul_nt(Tape& t, Value a, Value b) { return matmul_impl(t, a, b, true); }

Value softmax_rows(Tape& t, Value x) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 2) throw DimMismatch("softmax_rows expects [M,N]");
  const int m = xv.dim(0), n = xv.dim(1);
  Tensor out({m, n});
  for (int r = 0; r < m; ++r) {
    const double* xi = xv.data() + static_cast<std::size_t>(r) * n;
    double* oi = out.data() + static_cast<std::size_t>(r) * n;
    double mx = xi[0];
    for (int c = 1; c < n; ++c) mx = std::max(mx, xi[c]);
    double z = 0.0;
    for (int c = 0; c < n; ++c) {
      oi[c] = std::exp(xi[c] - mx);
      z += oi[c];
    }
    for (int c = 0; c < n; ++c) oi[c] /= z;
  }
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y, m, n](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& yv = t.val(y);
    Tensor& gx = t.grad_mut(x);
    for (int r = 0; r < m; ++r) {
      const double* gi = g.data() + static_cast<std::size_t>(r) * n;
      const double* yi = yv.data() + static_cast<std::size_t>(r) * n;
      double* gxi = gx.data() + static_cast<std::size_t>(r) * n;
      double gy = 0.0;
      for (int c = 0; c < n; ++c) gy += gi[c] * yi[c];
      for (int c = 0; c < n; ++c) gxi[c] += yi[c] * (gi[c] - gy);
    }
  });
  return y;
}

Value reshape(Tape& t, Value x, std::vector<int> shape) {
  Tensor out = t.val(x).reshaped(std::move(shape));
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y](Tape& t) {
    const Tensor& g = t.grad(y);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
  });
  return y;
}

// ---- feature-map ops ---------------------------------------------------------

namespace {

// Range of output rows [lo, hi) for which in = out*stride + off lies in
// [0, limit).
inline void conv_range(int off, int stride, int limit, int out_limit, int& lo,
                       int& hi) {
  lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
  const int top = limit - 1 - off;
  hi = top < 0 ? 0 : std::min(out_limit, top / stride + 1);
  if (hi < lo) hi = lo;
}

}  // namespace

Value conv2d(Tape& t, Value x, Value w, Value bias, const ConvSpec& spec) {
  const Tensor& xv = t.val(x);
  const Tensor& wv = t.val(w);
  if (xv.rank() != 3 || wv.rank() != 4) throw DimMismatch("conv2d shapes");
  const int cin = xv.dim(0), h = xv.dim(1), wd = xv.dim(2);
  const int cout = wv.dim(0), cpg = wv.dim(1), kh = wv.dim(2), kw = wv.dim(3);
  const int groups = spec.groups;
  if (cin % groups != 0 || cout % groups != 0 || cin / groups != cpg)
    throw DimMismatch("conv2d: group layout mismatch");
  const int s = spec.stride, p = spec.pad, d = spec.dilation;
  const int ho = (h + 2 * p - d * (kh - 1) - 1) / s + 1;
  const int wo = (wd + 2 * p - d * (kw - 1) - 1) / s + 1;
  if (ho < 1 || wo < 1) throw DimMismatch("conv2d: empty output");

  Tensor out({cout, ho, wo});
  const std::size_t in_plane = static_cast<std::size_t>(h) * wd;
  const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
  const int cout_per_group = cout / groups;

  for (int co = 0; co < cout; ++co) {
    double* op = out.data() + co * out_plane;
    if (bias.valid()) {
      const double bv = t.val(bias)[co];
      for (std::size_t i = 0; i < out_plane; ++i) op[i] = bv;
    }
    const int g = co / cout_per_group;
    for (int cl = 0; cl < cpg; ++cl) {
      const double* ip = xv.data() + (g * cpg + cl) * in_plane;
      const double* wk =
          wv.data() + ((static_cast<std::size_t>(co) * cpg + cl) * kh) * kw;
      for (int ky = 0; ky < kh; ++ky)
        for (int kx = 0; kx < kw; ++kx) {
          const double wvv = wk[ky * kw + kx];
          if (wvv == 0.0) continue;
          const int offy = ky * d - p, offx = kx * d - p;
          int ylo, yhi, xlo, xhi;
          conv_range(offy, s, h, ho, ylo, yhi);
          conv_range(offx, s, wd, wo, xlo, xhi);
          for (int oy = ylo; oy < yhi; ++oy) {
            const double* irow = ip + static_cast<std::size_t>(oy * s + offy) * wd;
            double* orow = op + static_cast<std::size_t>(oy) * wo;
            for (int ox = xlo; ox < xhi; ++ox)
              orow[ox] += wvv * irow[ox * s + offx];
          }
        }
    }
  }

  Value y = t.make_node(std::move(out));
  ConvSpec sp = spec;
  t.set_backward(y, [x, w, bias, y, sp, cin, h, wd, cout, cpg, kh, kw, ho,
                     wo](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& xv = t.val(x);
    const Tensor& wv = t.val(w);
    Tensor& gx = t.grad_mut(x);
    Tensor& gw = t.grad_mut(w);
    const int s = sp.stride, p = sp.pad, d = sp.dilation;
    const std::size_t in_plane = static_cast<std::size_t>(h) * wd;
    const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
    const int cout_per_group = cout / sp.groups;

    for (int co = 0; co < cout; ++co) {
      const double* gp = g.data() + co * out_plane;
      const int grp = co / cout_per_group;
      for (int cl = 0; cl < cpg; ++cl) {
        const int ci = grp * cpg + cl;
        const double* ip = xv.data() + ci * in_plane;
        double* gip = gx.data() + ci * in_plane;
        const double* wk =
            wv.data() + ((static_cast<std::size_t>(co) * cpg + cl) * kh) * kw;
        double* gwk =
            gw.data() + ((static_cast<std::size_t>(co) * cpg + cl) * kh) * kw;
        for (int ky = 0; ky < kh; ++ky)
          for (int kx = 0; kx < kw; ++kx) {
            const double wvv = wk[ky * kw + kx];
            const int offy = ky * d - p, offx = kx * d - p;
            int ylo, yhi, xlo, xhi;
            conv_range(offy, s, h, ho, ylo, yhi);
            conv_range(offx, s, wd, wo, xlo, xhi);
            double wacc = 0.0;
            for (int oy = ylo; oy < yhi; ++oy) {
              const double* grow = gp + static_cast<std::size_t>(oy) * wo;
              const double* irow =
                  ip + static_cast<std::size_t>(oy * s + offy) * wd;
              double* girow = gip + static_cast<std::size_t>(oy * s + offy) * wd;
              for (int ox = xlo; ox < xhi; ++ox) {
                const double gv = grow[ox];
                wacc += gv * irow[ox * s + offx];
                girow[ox * s + offx] += gv * wvv;
              }
            }
            gwk[ky * kw + kx] += wacc;
          }
      }
      if (bias.valid()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < out_plane; ++i) acc += gp[i];
        t.accumulate_at(bias, static_cast<std::size_t>(co), acc);
      }
    }
  });
  return y;
}

Value maxpool3x3(Tape& t, Value x) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 3) throw DimMismatch("maxpool3x3 expects [C,H,W]");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  Tensor out({c, h, w});
  auto argmax = std::make_shared<std::vector<std::int32_t>>(xv.numel());
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int ch = 0; ch < c; ++ch) {
    const double* ip = xv.data() + ch * plane;
    double* op = out.data() + ch * plane;
    std::int32_t* am = argmax->data() + ch * plane;
    // Max over the valid part of each 3x3 neighborhood; padding only
    // preserves the spatial size and never contributes a value.
    for (int y = 0; y < h; ++y)
      for (int xw = 0; xw < w; ++xw) {
        double best = -1e300;
        std::int32_t bi = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int sx = xw + dx;
            if (sx < 0 || sx >= w) continue;
            const double v = ip[static_cast<std::size_t>(sy) * w + sx];
            if (v > best) {
              best = v;
              bi = static_cast<std::int32_t>(sy * w + sx);
            }
          }
        }
        op[static_cast<std::size_t>(y) * w + xw] = best;
        am[static_cast<std::size_t>(y) * w + xw] = bi;
      }
  }
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y, argmax, c, h, w](Tape& t) {
    const Tensor& g = t.grad(y);
    Tensor& gx = t.grad_mut(x);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int ch = 0; ch < c; ++ch) {
      const double* gp = g.data() + ch * plane;
      double* gxp = gx.data() + ch * plane;
      const std::int32_t* am = argmax->data() + ch * plane;
      for (std::size_t i = 0; i < plane; ++i)
        if (am[i] >= 0) gxp[am[i]] += gp[i];
    }
  });
  return y;
}

Value concat_ch(Tape& t, Value a, Value b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (av.rank() != 3 || bv.rank() != 3 || av.dim(1) != bv.dim(1) ||
      av.dim(2) != bv.dim(2))
    throw ShapeMismatch("concat_ch: spatial dims differ");
  Tensor out({av.dim(0) + bv.dim(0), av.dim(1), av.dim(2)});
  std::copy(av.data(), av.data() + av.numel(), out.data());
  std::copy(bv.data(), bv.data() + bv.numel(), out.data() + av.numel());
  Value y = t.make_node(std::move(out));
  const std::size_t na = av.numel();
  t.set_backward(y, [a, b, y, na](Tape& t) {
    const Tensor& g = t.grad(y);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
    for (std::size_t i = na; i < g.numel(); ++i) gb[i - na] += g[i];
  });
  return y;
}

Value slice_ch(Tape& t, Value x, int first, int count) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 3 || first < 0 || first + count > xv.dim(0))
    throw DimMismatch("slice_ch: bad channel range");
  const std::size_t plane = static_cast<std::size_t>(xv.dim(1)) * xv.dim(2);
  Tensor out({count, xv.dim(1), xv.dim(2)});
  std::copy(xv.data() + first * plane, xv.data() + (first + count) * plane,
            out.data());
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y, first, plane](Tape& t) {
    const Tensor& g = t.grad(y);
    Tensor& gx = t.grad_mut(x);
    double* dst = gx.data() + first * plane;
    for (std::size_t i = 0; i < g.numel(); ++i) dst[i] += g[i];
  });
  return y;
}

Value flatten_hw(Tape& t, Value x) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 3) throw DimMismatch("flatten_hw expects [C,H,W]");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  const int l = h * w;
  Tensor out({l, c});
  for (int ch = 0; ch < c; ++ch) {
    const double* ip = xv.data() + static_cast<std::size_t>(ch) * l;
    for (int i = 0; i < l; ++i) out[static_cast<std::size_t>(i) * c + ch] = ip[i];
  }
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y, c, l](Tape& t) {
    const Tensor& g = t.grad(y);
    Tensor& gx = t.grad_mut(x);
    for (int ch = 0; ch < c; ++ch) {
      double* gp = gx.data() + static_cast<std::size_t>(ch) * l;
      for (int i = 0; i < l; ++i)
        gp[i] += g[static_cast<std::size_t>(i) * c + ch];
    }
  });
  return y;
}

Value unflatten_hw(Tape& t, Value x, int h, int w) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 2 || xv.dim(0) != h * w)
    throw DimMismatch("unflatten_hw: length mismatch");
  const int l = h * w, c = xv.dim(1);
  Tensor out({c, h, w});
  for (int ch = 0; ch < c; ++ch) {
    double* op = out.data() + static_cast<std::size_t>(ch) * l;
    for (int i = 0; i < l; ++i) op[i] = xv[static_cast<std::size_t>(i) * c + ch];
  }
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y, c, l](Tape& t) {
    const Tensor& g = t.grad(y);
    Tensor& gx = t.grad_mut(x);
    for (int ch = 0; ch < c; ++ch) {
      const double* gp = g.data() + static_cast<std::size_t>(ch) * l;
      for (int i = 0; i < l; ++i)
        gx[static_cast<std::size_t>(i) * c + ch] += gp[i];
    }
  });
  return y;
}

Value add_bias_ch(Tape& t, Value x, Value v) {
  const Tensor& xv = t.val(x);
  const Tensor& vv = t.val(v);
  if (xv.rank() != 3 || vv.numel() != static_cast<std::size_t>(xv.dim(0)))
    throw DimMismatch("add_bias_ch: channel mismatch");
  const std::size_t plane = static_cast<std::size_t>(xv.dim(1)) * xv.dim(2);
  Tensor out = xv;
  for (int c = 0; c < xv.dim(0); ++c) {
    double* op = out.data() + c * plane;
    const double bias = vv[c];
    for (std::size_t i = 0; i < plane; ++i) op[i] += bias;
  }
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, v, y, plane](Tape& t) {
    const Tensor& g = t.grad(y);
    Tensor& gx = t.grad_mut(x);
    Tensor& gv = t.grad_mut(v);
    const int c = t.val(x).dim(0);
    for (int ch = 0; ch < c; ++ch) {
      const double* gp = g.data() + ch * plane;
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += gp[i];
      gv[ch] += acc;
    }
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
  });
  return y;
}

Value scale_ch(Tape& t, Value x, Value v) {
  const Tensor& xv = t.val(x);
  const Tensor& vv = t.val(v);
  if (xv.rank() != 3 || vv.numel() != static_cast<std::size_t>(xv.dim(0)))
    throw DimMismatch("scale_ch: channel mismatch");
  const std::size_t plane = static_cast<std::size_t>(xv.dim(1)) * xv.dim(2);
  Tensor out = xv;
  for (int c = 0; c < xv.dim(0); ++c) {
    double* op = out.data() + c * plane;
    const double s = vv[c];
    for (std::size_t i = 0; i < plane; ++i) op[i] *= s;
  }
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, v, y, plane](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& xv = t.val(x);
    const Tensor& vv = t.val(v);
    Tensor& gx = t.grad_mut(x);
    Tensor& gv = t.grad_mut(v);
    for (int ch = 0; ch < xv.dim(0); ++ch) {
      const double* gp = g.data() + ch * plane;
      const double* xp = xv.data() + ch * plane;
      double* gxp = gx.data() + ch * plane;
      const double s = vv[ch];
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        acc += gp[i] * xp[i];
        gxp[i] += gp[i] * s;
      }
      gv[ch] += acc;
    }
  });
  return y;
}

Value global_avg_pool(Tape& t, Value x) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 3) throw DimMismatch("global_avg_pool expects [C,H,W]");
  const int c = xv.dim(0);
  const std::size_t plane = static_cast<std::size_t>(xv.dim(1)) * xv.dim(2);
  Tensor out({c});
  for (int ch = 0; ch < c; ++ch) {
    const double* ip = xv.data() + ch * plane;
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += ip[i];
    out[ch] = acc / static_cast<double>(plane);
  }
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y, c, plane](Tape& t) {
    const Tensor& g = t.grad(y);
    Tensor& gx = t.grad_mut(x);
    for (int ch = 0; ch < c; ++ch) {
      const double gv = g[ch] / static_cast<double>(plane);
      double* gp = gx.data() + ch * plane;
      for (std::size_t i = 0; i < plane; ++i) gp[i] += gv;
    }
  });
  return y;
}

Value layer_norm_chw(Tape& t, Value x, Value gamma, Value beta, double eps) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 3) throw DimMismatch("layer_norm_chw expects [C,H,W]");
  const int c = xv.dim(0);
  const std::size_t plane = static_cast<std::size_t>(xv.dim(1)) * xv.dim(2);
  if (t.val(gamma).numel() != static_cast<std::size_t>(c) ||
      t.val(beta).numel() != static_cast<std::size_t>(c))
    throw DimMismatch("layer_norm_chw: affine size mismatch");

  Tensor out(xv.shape());
  const Tensor& gv = t.val(gamma);
  const Tensor& bv = t.val(beta);
  for (std::size_t i = 0; i < plane; ++i) {
    double mu = 0.0;
    for (int ch = 0; ch < c; ++ch) mu += xv[ch * plane + i];
    mu /= c;
    double var = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      const double d = xv[ch * plane + i] - mu;
      var += d * d;
    }
    var /= c;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int ch = 0; ch < c; ++ch)
      out[ch * plane + i] =
          gv[ch] * (xv[ch * plane + i] - mu) * inv + bv[ch];
  }
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, gamma, beta, y, c, plane, eps](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& xv = t.val(x);
    const Tensor& gv = t.val(gamma);
    Tensor& gx = t.grad_mut(x);
    Tensor& gg = t.grad_mut(gamma);
    Tensor& gb = t.grad_mut(beta);
    for (std::size_t i = 0; i < plane; ++i) {
      double mu = 0.0;
      for (int ch = 0; ch < c; ++ch) mu += xv[ch * plane + i];
      mu /= c;
      double var = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        const double d = xv[ch * plane + i] - mu;
        var += d * d;
      }
      var /= c;
      const double inv = 1.0 / std::sqrt(var + eps);
      double mean_gg = 0.0, mean_gx = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        const double xhat = (xv[ch * plane + i] - mu) * inv;
        const double gi = g[ch * plane + i] * gv[ch];
        mean_gg += gi;
        mean_gx += gi * xhat;
        gg[ch] += g[ch * plane + i] * xhat;
        gb[ch] += g[ch * plane + i];
      }
      mean_gg /= c;
      mean_gx /= c;
      for (int ch = 0; ch < c; ++ch) {
        const double xhat = (xv[ch * plane + i] - mu) * inv;
        const double gi = g[ch * plane + i] * gv[ch];
        gx[ch * plane + i] += inv * (gi - mean_gg - xhat * mean_gx);
      }
    }
  });
  return y;
}

Value upsample_nearest2(Tape& t, Value x) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 3) throw DimMismatch("upsample expects [C,H,W]");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  Tensor out({c, 2 * h, 2 * w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < 2 * h; ++y)
      for (int xw = 0; xw < 2 * w; ++xw)
        out.at(ch, y, xw) = xv.at(ch, y / 2, xw / 2);
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y, c, h, w](Tape& t) {
    const Tensor& g = t.grad(y);
    Tensor& gx = t.grad_mut(x);
    for (int ch = 0; ch < c; ++ch)
      for (int yy = 0; yy < 2 * h; ++yy)
        for (int xw = 0; xw < 2 * w; ++xw)
          gx.at(ch, yy / 2, xw / 2) += g.at(ch, yy, xw);
  });
  return y;
}

Value avgpool_to_grid(Tape& t, Value x, int grid) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 3) throw DimMismatch("avgpool_to_grid expects [C,H,W]");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  if (h < grid || w < grid)
    throw DimMismatch("avgpool_to_grid: image smaller than grid");
  Tensor out({c, grid, grid});
  for (int ch = 0; ch < c; ++ch)
    for (int gy = 0; gy < grid; ++gy) {
      const int y0 = gy * h / grid, y1 = (gy + 1) * h / grid;
      for (int gx = 0; gx < grid; ++gx) {
        const int x0 = gx * w / grid, x1 = (gx + 1) * w / grid;
        double acc = 0.0;
        for (int yy = y0; yy < y1; ++yy)
          for (int xx = x0; xx < x1; ++xx) acc += xv.at(ch, yy, xx);
        out.at(ch, gy, gx) = acc / ((y1 - y0) * (x1 - x0));
      }
    }
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y, c, h, w, grid](Tape& t) {
    const Tensor& g = t.grad(y);
    Tensor& gx = t.grad_mut(x);
    for (int ch = 0; ch < c; ++ch)
      for (int gy = 0; gy < grid; ++gy) {
        const int y0 = gy * h / grid, y1 = (gy + 1) * h / grid;
        for (int gxi = 0; gxi < grid; ++gxi) {
          const int x0 = gxi * w / grid, x1 = (gxi + 1) * w / grid;
          const double gv = g.at(ch, gy, gxi) / ((y1 - y0) * (x1 - x0));
          for (int yy = y0; yy < y1; ++yy)
            for (int xx = x0; xx < x1; ++xx) gx.at(ch, yy, xx) += gv;
        }
      }
  });
  return y;
}

Value selective_scan(Tape& t, Value x, Value a, Value b, Value c, Value d) {
  auto h_store = std::make_shared<std::vector<double>>();
  Tensor out = selective_scan_forward(t.val(x), t.val(a), t.val(b), t.val(c),
                                      t.val(d), h_store.get());
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, a, b, c, d, y, h_store](Tape& t) {
    const Tensor& g = t.grad(y);
    const Tensor& xv = t.val(x);
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    const Tensor& cv = t.val(c);
    const Tensor& dv = t.val(d);
    Tensor& gx = t.grad_mut(x);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    Tensor& gc = t.grad_mut(c);
    Tensor& gd = t.grad_mut(d);
    const int l = xv.dim(0), cn = xv.dim(1), n = av.dim(1);
    const double* hs = h_store->data();  // [t][c][n]
    std::vector<double> dh(static_cast<std::size_t>(n));
    for (int ch = 0; ch < cn; ++ch) {
      std::fill(dh.begin(), dh.end(), 0.0);
      const double* ac = av.data() + static_cast<std::size_t>(ch) * n;
      const double* bc = bv.data() + static_cast<std::size_t>(ch) * n;
      const double* cc = cv.data() + static_cast<std::size_t>(ch) * n;
      double* gac = ga.data() + static_cast<std::size_t>(ch) * n;
      double* gbc = gb.data() + static_cast<std::size_t>(ch) * n;
      double* gcc = gc.data() + static_cast<std::size_t>(ch) * n;
      for (int tt = l - 1; tt >= 0; --tt) {
        const double gy = g[static_cast<std::size_t>(tt) * cn + ch];
        const double xt = xv[static_cast<std::size_t>(tt) * cn + ch];
        const double* ht =
            hs + (static_cast<std::size_t>(tt) * cn + ch) * n;
        const double* hprev =
            tt > 0 ? hs + (static_cast<std::size_t>(tt - 1) * cn + ch) * n
                   : nullptr;
        gd[ch] += gy * xt;
        double gx_acc = dv[ch] * gy;
        for (int k = 0; k < n; ++k) {
          gcc[k] += gy * ht[k];
          const double dhk = dh[k] + gy * cc[k];
          gac[k] += dhk * (hprev ? hprev[k] : 0.0);
          gbc[k] += dhk * xt;
          gx_acc += dhk * bc[k];
          dh[k] = dhk * ac[k];
        }
        gx[static_cast<std::size_t>(tt) * cn + ch] += gx_acc;
      }
    }
  });
  return y;
}

Value dwt_haar(Tape& t, Value x) {
  Value y = t.make_node(haar_analysis_packed(t.val(x)));
  t.set_backward(y, [x, y](Tape& t) {
    // Orthonormal transform: adjoint equals inverse.
    t.accumulate(x, haar_synthesis_packed(t.grad(y)));
  });
  return y;
}

Value idwt_haar(Tape& t, Value x) {
  Value y = t.make_node(haar_synthesis_packed(t.val(x)));
  t.set_backward(y, [x, y](Tape& t) {
    t.accumulate(x, haar_analysis_packed(t.grad(y)));
  });
  return y;
}

namespace {

// Row-major 3x3 color matrices; ycc offset handled separately.
constexpr double kToYcc[9] = {0.299,           0.587,          0.114,
                              -0.299 / 1.772,  -0.587 / 1.772, 0.886 / 1.772,
                              0.701 / 1.402,   -0.587 / 1.402, -0.114 / 1.402};
constexpr double kFromYcc[9] = {1.0, 0.0,
                                1.402, 1.0,
                                -0.114 * 1.772 / 0.587, -0.299 * 1.402 / 0.587,
                                1.0, 1.772, 0.0};

Value color_matrix_op(Tape& t, Value x, const double* m, bool offset_in,
                      bool offset_out, const char* what) {
  const Tensor& xv = t.val(x);
  if (xv.rank() != 3 || xv.dim(0) != 3) throw DimMismatch(what);
  const std::size_t plane = static_cast<std::size_t>(xv.dim(1)) * xv.dim(2);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < plane; ++i) {
    double in[3] = {xv[i], xv[plane + i], xv[2 * plane + i]};
    if (offset_in) {
      in[1] -= 0.5;
      in[2] -= 0.5;
    }
    for (int r = 0; r < 3; ++r) {
      double acc = m[3 * r] * in[0] + m[3 * r + 1] * in[1] + m[3 * r + 2] * in[2];
      if (offset_out && r > 0) acc += 0.5;
      out[r * plane + i] = acc;
    }
  }
  Value y = t.make_node(std::move(out));
  t.set_backward(y, [x, y, m, plane](Tape& t) {
    const Tensor& g = t.grad(y);
    Tensor& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < plane; ++i) {
      const double go[3] = {g[i], g[plane + i], g[2 * plane + i]};
      for (int cIn = 0; cIn < 3; ++cIn)
        gx[cIn * plane + i] +=
            m[cIn] * go[0] + m[3 + cIn] * go[1] + m[6 + cIn] * go[2];
    }
  });
  return y;
}

}  // namespace

Value rgb_to_ycbcr_node(Tape& t, Value rgb) {
  return color_matrix_op(t, rgb, kToYcc, false, true, "rgb_to_ycbcr_node");
}

Value ycbcr_to_rgb_node(Tape& t, Value ycc) {
  return color_matrix_op(t, ycc, kFromYcc, true, false, "ycbcr_to_rgb_node");
}

}  // namespace awm::ad
