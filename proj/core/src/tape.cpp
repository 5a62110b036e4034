#include "lanerl/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lanerl/parallel.hpp"

namespace lanerl::nn {

Var Tape::input(Tensor value, bool requires_grad) {
  return record(std::move(value), requires_grad);
}

Var Tape::record(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::set_back(Var v, BackFn back) { nodes_[v.id].back = std::move(back); }

const Tensor& Tape::grad(Var v) const {
  if (!backward_done_) throw std::logic_error("tape: grad() before backward()");
  const Node& node = nodes_.at(v.id);
  if (!node.grad_ready) {
    // Node is independent of the loss; its gradient is identically zero.
    Node& mut = const_cast<Node&>(node);
    mut.grad = Tensor(node.value.shape());
    mut.grad_ready = true;
  }
  return node.grad;
}

Tensor& Tape::grad_buffer(Var v) {
  Node& node = nodes_[v.id];
  if (!node.grad_ready) {
    node.grad = Tensor(node.value.shape());
    node.grad_ready = true;
  }
  return node.grad;
}

void Tape::backward(Var loss) {
  if (!loss.valid() || static_cast<std::size_t>(loss.id) >= nodes_.size()) {
    throw std::logic_error("tape: backward() without a recorded forward pass");
  }
  if (backward_done_) throw std::logic_error("tape: backward() may run only once");
  if (nodes_[loss.id].value.numel() != 1) {
    throw std::invalid_argument("tape: loss must be a single element");
  }
  grad_buffer(loss)[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& node = nodes_[i];
    if (node.back && node.grad_ready) node.back(*this);
  }
  backward_done_ = true;
}

namespace {

void check_same_shape(const Tape& t, Var a, Var b, const char* op) {
  if (!t.value(a).same_shape(t.value(b))) {
    throw std::invalid_argument(std::string("tape: shape mismatch in ") + op);
  }
}

void accumulate(Tape& t, Var dst, const Tensor& g) {
  Tensor& buf = t.grad_buffer(dst);
  for (std::size_t i = 0; i < g.numel(); ++i) buf[i] += g[i];
}

/// Elementwise op with derivative computable from input and output values.
template <typename Fwd, typename Bwd>
Var unary_op(Tape& t, Var a, Fwd fwd, Bwd dfdx) {
  const Tensor& va = t.value(a);
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = fwd(va[i]);
  Var r = t.record(std::move(out), t.requires_grad(a));
  if (t.requires_grad(a)) {
    t.set_back(r, [r, a, dfdx](Tape& tp) {
      const Tensor& g = tp.grad_buffer(r);
      const Tensor& x = tp.value(a);
      const Tensor& y = tp.value(r);
      Tensor& ga = tp.grad_buffer(a);
      for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * dfdx(x[i], y[i]);
    });
  }
  return r;
}

}  // namespace

Var add(Tape& t, Var a, Var b) {
  check_same_shape(t, a, b, "add");
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = va[i] + vb[i];
  Var r = t.record(std::move(out), t.requires_grad(a) || t.requires_grad(b));
  if (t.requires_grad(r)) {
    t.set_back(r, [r, a, b](Tape& tp) {
      const Tensor& g = tp.grad_buffer(r);
      if (tp.requires_grad(a)) accumulate(tp, a, g);
      if (tp.requires_grad(b)) accumulate(tp, b, g);
    });
  }
  return r;
}

Var sub(Tape& t, Var a, Var b) {
  check_same_shape(t, a, b, "sub");
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = va[i] - vb[i];
  Var r = t.record(std::move(out), t.requires_grad(a) || t.requires_grad(b));
  if (t.requires_grad(r)) {
    t.set_back(r, [r, a, b](Tape& tp) {
      const Tensor& g = tp.grad_buffer(r);
      if (tp.requires_grad(a)) accumulate(tp, a, g);
      if (tp.requires_grad(b)) {
        Tensor& gb = tp.grad_buffer(b);
        for (std::size_t i = 0; i < g.numel(); ++i) gb[i] -= g[i];
      }
    });
  }
  return r;
}

Var mul(Tape& t, Var a, Var b) {
  check_same_shape(t, a, b, "mul");
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = va[i] * vb[i];
  Var r = t.record(std::move(out), t.requires_grad(a) || t.requires_grad(b));
  if (t.requires_grad(r)) {
    t.set_back(r, [r, a, b](Tape& tp) {
      const Tensor& g = tp.grad_buffer(r);
      const Tensor& va2 = tp.value(a);
      const Tensor& vb2 = tp.value(b);
      if (tp.requires_grad(a)) {
        Tensor& ga = tp.grad_buffer(a);
        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * vb2[i];
      }
      if (tp.requires_grad(b)) {
        Tensor& gb = tp.grad_buffer(b);
        for (std::size_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * va2[i];
      }
    });
  }
  return r;
}

Var min_elem(Tape& t, Var a, Var b) {
  check_same_shape(t, a, b, "min_elem");
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = va[i] <= vb[i] ? va[i] : vb[i];
  Var r = t.record(std::move(out), t.requires_grad(a) || t.requires_grad(b));
  if (t.requires_grad(r)) {
    t.set_back(r, [r, a, b](Tape& tp) {
      const Tensor& g = tp.grad_buffer(r);
      const Tensor& va2 = tp.value(a);
      const Tensor& vb2 = tp.value(b);
      bool need_a = tp.requires_grad(a), need_b = tp.requires_grad(b);
      Tensor* ga = need_a ? &tp.grad_buffer(a) : nullptr;
      Tensor* gb = need_b ? &tp.grad_buffer(b) : nullptr;
      for (std::size_t i = 0; i < g.numel(); ++i) {
        if (va2[i] <= vb2[i]) {
          if (need_a) (*ga)[i] += g[i];
        } else if (need_b) {
          (*gb)[i] += g[i];
        }
      }
    });
  }
  return r;
}

Var neg(Tape& t, Var a) {
  return unary_op(
      t, a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var add_scalar(Tape& t, Var a, double s) {
  return unary_op(
      t, a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var mul_scalar(Tape& t, Var a, double s) {
  return unary_op(
      t, a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Var relu(Tape& t, Var a) {
  return unary_op(
      t, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh_op(Tape& t, Var a) {
  return unary_op(
      t, a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var exp_op(Tape& t, Var a) {
  return unary_op(
      t, a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var square(Tape& t, Var a) {
  return unary_op(
      t, a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var softplus(Tape& t, Var a) {
  return unary_op(
      t, a,
      [](double x) { return x > 30.0 ? x : std::log1p(std::exp(std::min(x, 30.0))); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var clamp(Tape& t, Var a, double lo, double hi) {
  return unary_op(
      t, a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var sum_all(Tape& t, Var a) {
  const Tensor& va = t.value(a);
  double s = 0.0;
  for (std::size_t i = 0; i < va.numel(); ++i) s += va[i];
  Var r = t.record(Tensor::scalar(s), t.requires_grad(a));
  if (t.requires_grad(a)) {
    t.set_back(r, [r, a](Tape& tp) {
      double g = tp.grad_buffer(r)[0];
      Tensor& ga = tp.grad_buffer(a);
      for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g;
    });
  }
  return r;
}

Var mean_all(Tape& t, Var a) {
  std::size_t n = t.value(a).numel();
  return mul_scalar(t, sum_all(t, a), 1.0 / static_cast<double>(n));
}

Var concat_cols(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("tape: concat of nothing");
  int n = t.value(parts[0]).dim(0);
  int total = 0;
  bool rg = false;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    if (v.rank() != 2 || v.dim(0) != n) {
      throw std::invalid_argument("tape: concat_cols expects (N, D) with equal N");
    }
    total += v.dim(1);
    rg = rg || t.requires_grad(p);
  }
  Tensor out({n, total});
  int col = 0;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    int d = v.dim(1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) out[i * total + col + j] = v[i * d + j];
    }
    col += d;
  }
  Var r = t.record(std::move(out), rg);
  if (rg) {
    t.set_back(r, [r, parts, n, total](Tape& tp) {
      const Tensor& g = tp.grad_buffer(r);
      int col = 0;
      for (Var p : parts) {
        int d = tp.value(p).dim(1);
        if (tp.requires_grad(p)) {
          Tensor& gp = tp.grad_buffer(p);
          for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) gp[i * d + j] += g[i * total + col + j];
          }
        }
        col += d;
      }
    });
  }
  return r;
}

Var slice_cols(Tape& t, Var a, int begin, int end) {
  const Tensor& va = t.value(a);
  if (va.rank() != 2 || begin < 0 || end > va.dim(1) || begin >= end) {
    throw std::invalid_argument("tape: bad slice_cols range");
  }
  int n = va.dim(0), d = va.dim(1), w = end - begin;
  Tensor out({n, w});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < w; ++j) out[i * w + j] = va[i * d + begin + j];
  }
  Var r = t.record(std::move(out), t.requires_grad(a));
  if (t.requires_grad(a)) {
    t.set_back(r, [r, a, begin, n, d, w](Tape& tp) {
      const Tensor& g = tp.grad_buffer(r);
      Tensor& ga = tp.grad_buffer(a);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < w; ++j) ga[i * d + begin + j] += g[i * w + j];
      }
    });
  }
  return r;
}

Var sum_rows(Tape& t, Var a) {
  const Tensor& va = t.value(a);
  if (va.rank() != 2) throw std::invalid_argument("tape: sum_rows expects (N, D)");
  int n = va.dim(0), d = va.dim(1);
  Tensor out({n, 1});
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += va[i * d + j];
    out[i] = s;
  }
  Var r = t.record(std::move(out), t.requires_grad(a));
  if (t.requires_grad(a)) {
    t.set_back(r, [r, a, n, d](Tape& tp) {
      const Tensor& g = tp.grad_buffer(r);
      Tensor& ga = tp.grad_buffer(a);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) ga[i * d + j] += g[i];
      }
    });
  }
  return r;
}

Var fc(Tape& t, Var x, Var w, Var b) {
  const Tensor& vx = t.value(x);
  const Tensor& vw = t.value(w);
  const Tensor& vb = t.value(b);
  if (vx.rank() != 2 || vw.rank() != 2 || vx.dim(1) != vw.dim(1) || vb.numel() != static_cast<std::size_t>(vw.dim(0))) {
    throw std::invalid_argument("tape: fc shape mismatch");
  }
  int n = vx.dim(0), d = vx.dim(1), o = vw.dim(0);
  Tensor out({n, o});
  {
    const double* xp = vx.data();
    const double* wp = vw.data();
    const double* bp = vb.data();
    double* op = out.data();
    parallel_ranges(static_cast<std::size_t>(n), 2.0 * n * d * o,
                    [&](std::size_t i0, std::size_t i1) {
                      for (std::size_t i = i0; i < i1; ++i) {
                        const double* xi = xp + i * d;
                        double* oi = op + i * o;
                        for (int k = 0; k < o; ++k) {
                          const double* wk = wp + static_cast<std::size_t>(k) * d;
                          double acc = bp[k];
                          for (int j = 0; j < d; ++j) acc += xi[j] * wk[j];
                          oi[k] = acc;
                        }
                      }
                    });
  }
  bool rg = t.requires_grad(x) || t.requires_grad(w) || t.requires_grad(b);
  Var r = t.record(std::move(out), rg);
  if (rg) {
    t.set_back(r, [r, x, w, b, n, d, o](Tape& tp) {
      const Tensor& g = tp.grad_buffer(r);
      const double* gp = g.data();
      if (tp.requires_grad(x)) {
        const double* wp = tp.value(w).data();
        double* gx = tp.grad_buffer(x).data();
        parallel_ranges(static_cast<std::size_t>(n), 2.0 * n * d * o,
                        [&](std::size_t i0, std::size_t i1) {
                          for (std::size_t i = i0; i < i1; ++i) {
                            const double* gi = gp + i * o;
                            double* gxi = gx + i * d;
                            for (int k = 0; k < o; ++k) {
                              double gv = gi[k];
                              const double* wk = wp + static_cast<std::size_t>(k) * d;
                              for (int j = 0; j < d; ++j) gxi[j] += gv * wk[j];
                            }
                          }
                        });
      }
      if (tp.requires_grad(w)) {
        const double* xp = tp.value(x).data();
        double* gw = tp.grad_buffer(w).data();
        parallel_ranges(static_cast<std::size_t>(o), 2.0 * n * d * o,
                        [&](std::size_t k0, std::size_t k1) {
                          for (std::size_t k = k0; k < k1; ++k) {
                            double* gwk = gw + k * d;
                            for (int i = 0; i < n; ++i) {
                              double gv = gp[i * o + k];
                              const double* xi = xp + static_cast<std::size_t>(i) * d;
                              for (int j = 0; j < d; ++j) gwk[j] += gv * xi[j];
                            }
                          }
                        });
      }
      if (tp.requires_grad(b)) {
        double* gb = tp.grad_buffer(b).data();
        for (int i = 0; i < n; ++i) {
          for (int k = 0; k < o; ++k) gb[k] += gp[i * o + k];
        }
      }
    });
  }
  return r;
}

namespace {

struct ConvDims {
  int n, c, h, w, o, kh, kw, ho, wo, stride, pad;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad) {
  ConvDims d{};
  d.n = x.dim(0);
  d.c = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.o = w.dim(0);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  d.stride = stride;
  d.pad = pad;
  d.ho = (d.h + 2 * pad - d.kh) / stride + 1;
  d.wo = (d.w + 2 * pad - d.kw) / stride + 1;
  return d;
}

inline void out_col_range(int k, int pad, int stride, int in_extent, int out_extent,
                          int& lo, int& hi) {
  // Valid output columns j with 0 <= j*stride + k - pad < in_extent.
  int num = pad - k;
  lo = num <= 0 ? 0 : (num + stride - 1) / stride;
  hi = (in_extent - 1 + pad - k) / stride;
  if (hi > out_extent - 1) hi = out_extent - 1;
}

}  // namespace

Var conv2d(Tape& t, Var x, Var w, Var b, int stride, int pad) {
  const Tensor& vx = t.value(x);
  const Tensor& vw = t.value(w);
  const Tensor& vb = t.value(b);
  if (vx.rank() != 4 || vw.rank() != 4 || vx.dim(1) != vw.dim(1) ||
      vb.numel() != static_cast<std::size_t>(vw.dim(0))) {
    throw std::invalid_argument("tape: conv2d shape mismatch");
  }
  ConvDims dm = conv_dims(vx, vw, stride, pad);
  Tensor out({dm.n, dm.o, dm.ho, dm.wo});
  const double flops = 2.0 * dm.n * dm.o * dm.c * dm.ho * dm.wo * dm.kh * dm.kw;
  {
    const double* xp = vx.data();
    const double* wp = vw.data();
    const double* bp = vb.data();
    double* op = out.data();
    const std::size_t x_im = static_cast<std::size_t>(dm.h) * dm.w;
    const std::size_t o_im = static_cast<std::size_t>(dm.ho) * dm.wo;
    parallel_ranges(static_cast<std::size_t>(dm.n), flops, [&](std::size_t n0, std::size_t n1) {
      for (std::size_t ni = n0; ni < n1; ++ni) {
        const double* xn = xp + ni * dm.c * x_im;
        double* on = op + ni * dm.o * o_im;
        for (int oc = 0; oc < dm.o; ++oc) {
          double* och = on + oc * o_im;
          for (std::size_t i = 0; i < o_im; ++i) och[i] = bp[oc];
          for (int ic = 0; ic < dm.c; ++ic) {
            const double* xc = xn + ic * x_im;
            const double* wk = wp + (static_cast<std::size_t>(oc) * dm.c + ic) * dm.kh * dm.kw;
            for (int oi = 0; oi < dm.ho; ++oi) {
              double* orow = och + static_cast<std::size_t>(oi) * dm.wo;
              for (int ky = 0; ky < dm.kh; ++ky) {
                int iy = oi * dm.stride + ky - dm.pad;
                if (iy < 0 || iy >= dm.h) continue;
                const double* xrow = xc + static_cast<std::size_t>(iy) * dm.w;
                for (int kx = 0; kx < dm.kw; ++kx) {
                  double wv = wk[ky * dm.kw + kx];
                  int jlo, jhi;
                  out_col_range(kx, dm.pad, dm.stride, dm.w, dm.wo, jlo, jhi);
                  const double* xs = xrow + kx - dm.pad;
                  if (dm.stride == 1) {
                    for (int j = jlo; j <= jhi; ++j) orow[j] += wv * xs[j];
                  } else {
                    for (int j = jlo; j <= jhi; ++j) orow[j] += wv * xs[j * dm.stride];
                  }
                }
              }
            }
          }
        }
      }
    });
  }
  bool rg = t.requires_grad(x) || t.requires_grad(w) || t.requires_grad(b);
  Var r = t.record(std::move(out), rg);
  if (rg) {
    t.set_back(r, [r, x, w, b, dm, flops](Tape& tp) {
      const Tensor& g = tp.grad_buffer(r);
      const double* gp = g.data();
      const std::size_t x_im = static_cast<std::size_t>(dm.h) * dm.w;
      const std::size_t o_im = static_cast<std::size_t>(dm.ho) * dm.wo;
      if (tp.requires_grad(x)) {
        const double* wp = tp.value(w).data();
        double* gx = tp.grad_buffer(x).data();
        parallel_ranges(static_cast<std::size_t>(dm.n), flops, [&](std::size_t n0, std::size_t n1) {
          for (std::size_t ni = n0; ni < n1; ++ni) {
            const double* gn = gp + ni * dm.o * o_im;
            double* gxn = gx + ni * dm.c * x_im;
            for (int oc = 0; oc < dm.o; ++oc) {
              const double* gch = gn + oc * o_im;
              for (int ic = 0; ic < dm.c; ++ic) {
                double* gxc = gxn + ic * x_im;
                const double* wk =
                    wp + (static_cast<std::size_t>(oc) * dm.c + ic) * dm.kh * dm.kw;
                for (int oi = 0; oi < dm.ho; ++oi) {
                  const double* grow = gch + static_cast<std::size_t>(oi) * dm.wo;
                  for (int ky = 0; ky < dm.kh; ++ky) {
                    int iy = oi * dm.stride + ky - dm.pad;
                    if (iy < 0 || iy >= dm.h) continue;
                    double* gxrow = gxc + static_cast<std::size_t>(iy) * dm.w;
                    for (int kx = 0; kx < dm.kw; ++kx) {
                      double wv = wk[ky * dm.kw + kx];
                      int jlo, jhi;
                      out_col_range(kx, dm.pad, dm.stride, dm.w, dm.wo, jlo, jhi);
                      double* gxs = gxrow + kx - dm.pad;
                      for (int j = jlo; j <= jhi; ++j) gxs[j * dm.stride] += wv * grow[j];
                    }
                  }
                }
              }
            }
          }
        });
      }
      if (tp.requires_grad(w)) {
        const double* xp = tp.value(x).data();
        double* gw = tp.grad_buffer(w).data();
        parallel_ranges(static_cast<std::size_t>(dm.o), flops, [&](std::size_t o0, std::size_t o1) {
          for (std::size_t oc = o0; oc < o1; ++oc) {
            for (int ic = 0; ic < dm.c; ++ic) {
              double* gwk = gw + (oc * dm.c + ic) * dm.kh * dm.kw;
              for (std::size_t ni = 0; ni < static_cast<std::size_t>(dm.n); ++ni) {
                const double* gch = gp + (ni * dm.o + oc) * o_im;
                const double* xc = xp + (ni * dm.c + ic) * x_im;
                for (int oi = 0; oi < dm.ho; ++oi) {
                  const double* grow = gch + static_cast<std::size_t>(oi) * dm.wo;
                  for (int ky = 0; ky < dm.kh; ++ky) {
                    int iy = oi * dm.stride + ky - dm.pad;
                    if (iy < 0 || iy >= dm.h) continue;
                    const double* xrow = xc + static_cast<std::size_t>(iy) * dm.w;
                    for (int kx = 0; kx < dm.kw; ++kx) {
                      int jlo, jhi;
                      out_col_range(kx, dm.pad, dm.stride, dm.w, dm.wo, jlo, jhi);
                      const double* xs = xrow + kx - dm.pad;
                      double acc = 0.0;
                      for (int j = jlo; j <= jhi; ++j) acc += grow[j] * xs[j * dm.stride];
                      gwk[ky * dm.kw + kx] += acc;
                    }
                  }
                }
              }
            }
          }
        });
      }
      if (tp.requires_grad(b)) {
        double* gb = tp.grad_buffer(b).data();
        for (int ni = 0; ni < dm.n; ++ni) {
          for (int oc = 0; oc < dm.o; ++oc) {
            const double* gch = gp + (static_cast<std::size_t>(ni) * dm.o + oc) * o_im;
            double acc = 0.0;
            for (std::size_t i = 0; i < o_im; ++i) acc += gch[i];
            gb[oc] += acc;
          }
        }
      }
    });
  }
  return r;
}

Var global_avg_pool(Tape& t, Var x) {
  const Tensor& vx = t.value(x);
  if (vx.rank() != 4) throw std::invalid_argument("tape: global_avg_pool expects (N,C,H,W)");
  int n = vx.dim(0), c = vx.dim(1);
  std::size_t im = static_cast<std::size_t>(vx.dim(2)) * vx.dim(3);
  Tensor out({n, c});
  const double inv = 1.0 / static_cast<double>(im);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c; ++j) {
      const double* p = vx.data() + (static_cast<std::size_t>(i) * c + j) * im;
      double s = 0.0;
      for (std::size_t k = 0; k < im; ++k) s += p[k];
      out[i * c + j] = s * inv;
    }
  }
  Var r = t.record(std::move(out), t.requires_grad(x));
  if (t.requires_grad(x)) {
    t.set_back(r, [r, x, n, c, im, inv](Tape& tp) {
      const Tensor& g = tp.grad_buffer(r);
      Tensor& gx = tp.grad_buffer(x);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < c; ++j) {
          double gv = g[i * c + j] * inv;
          double* p = gx.data() + (static_cast<std::size_t>(i) * c + j) * im;
          for (std::size_t k = 0; k < im; ++k) p[k] += gv;
        }
      }
    });
  }
  return r;
}

}  // namespace lanerl::nn
