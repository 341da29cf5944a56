// Copyright 2026 The weakmil Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "weakmil/autodiff.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "weakmil/error.hpp"

namespace weakmil::ag {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::Constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), false, false, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::Parameter(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), false, true, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::Record(Tensor value, std::span<const Var> inputs,
                 BackwardFn backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape() != this) throw ContractError("variable from a different tape");
    needs = needs || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Tensor(), false, needs,
                        needs ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (!n.has_grad) {
    // Unreached nodes have a zero gradient; materialize lazily.
    auto& mut = const_cast<Node&>(n);
    mut.grad = Tensor(n.value.shape());
    mut.has_grad = true;
  }
  return n.grad;
}

Tensor& Tape::GradBuffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::Accumulate(std::size_t id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  Tensor& buf = GradBuffer(id);
  if (buf.size() != g.size()) {
    throw DimensionError("gradient shape " + ShapeString(g.shape()) +
                         " does not match value " + ShapeString(buf.shape()));
  }
  auto dst = buf.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::Backward(Var loss) {
  if (loss.tape() != this) throw ContractError("loss from a different tape");
  if (nodes_[loss.id()].value.size() != 1) {
    throw DimensionError("backward needs a scalar loss, got " +
                         ShapeString(nodes_[loss.id()].value.shape()));
  }
  GradBuffer(loss.id())[0] += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.has_grad) n.backward(*this, i);
  }
}

namespace {

void RequireSameShape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + " shape mismatch: " +
                         ShapeString(a.shape()) + " vs " +
                         ShapeString(b.shape()));
  }
}

void RequireRank(const Var& a, std::size_t rank, const char* op) {
  if (a.value().rank() != rank) {
    throw DimensionError(std::string(op) + " expects rank " +
                         std::to_string(rank) + ", got " +
                         ShapeString(a.shape()));
  }
}

template <typename F>
Tensor Map(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

}  // namespace

Var Matmul(Var a, Var b) {
  Tensor out = weakmil::Matmul(a.value(), b.value());
  const std::array<Var, 2> in{a, b};
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->Record(std::move(out), in, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      t.Accumulate(ia, weakmil::Matmul(g, weakmil::Transpose(t.value(ib))));
    }
    if (t.requires_grad(ib)) {
      t.Accumulate(ib, weakmil::Matmul(weakmil::Transpose(t.value(ia)), g));
    }
  });
}

Var Transpose(Var a) {
  const std::array<Var, 1> in{a};
  const std::size_t ia = a.id();
  return a.tape()->Record(weakmil::Transpose(a.value()), in,
                          [ia](Tape& t, std::size_t self) {
                            t.Accumulate(ia, weakmil::Transpose(t.grad(self)));
                          });
}

Var Reshape(Var a, Shape shape) {
  const std::array<Var, 1> in{a};
  const std::size_t ia = a.id();
  const Shape original = a.shape();
  return a.tape()->Record(a.value().Reshaped(std::move(shape)), in,
                          [ia, original](Tape& t, std::size_t self) {
                            t.Accumulate(ia, t.grad(self).Reshaped(original));
                          });
}

Var Add(Var a, Var b) {
  RequireSameShape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const std::array<Var, 2> in{a, b};
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->Record(std::move(out), in, [ia, ib](Tape& t, std::size_t self) {
    t.Accumulate(ia, t.grad(self));
    t.Accumulate(ib, t.grad(self));
  });
}

Var Sub(Var a, Var b) {
  RequireSameShape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const std::array<Var, 2> in{a, b};
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->Record(std::move(out), in, [ia, ib](Tape& t, std::size_t self) {
    t.Accumulate(ia, t.grad(self));
    t.Accumulate(ib, Map(t.grad(self), [](double g) { return -g; }));
  });
}

Var Mul(Var a, Var b) {
  RequireSameShape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::array<Var, 2> in{a, b};
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->Record(std::move(out), in, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= t.value(ib)[i];
      t.Accumulate(ia, ga);
    }
    if (t.requires_grad(ib)) {
      Tensor gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= t.value(ia)[i];
      t.Accumulate(ib, gb);
    }
  });
}

Var Scale(Var a, double s) {
  const std::array<Var, 1> in{a};
  const std::size_t ia = a.id();
  return a.tape()->Record(Map(a.value(), [s](double v) { return v * s; }), in,
                          [ia, s](Tape& t, std::size_t self) {
                            t.Accumulate(ia, Map(t.grad(self), [s](double g) {
                                           return g * s;
                                         }));
                          });
}

Var AddRowBias(Var x, Var b) {
  RequireRank(x, 2, "add_row_bias");
  const std::size_t n = x.value().dim(0), m = x.value().dim(1);
  if (b.value().size() != m) {
    throw DimensionError("bias of shape " + ShapeString(b.shape()) +
                         " does not broadcast over " + ShapeString(x.shape()));
  }
  Tensor out = x.value();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out.at(r, c) += b.value()[c];
  const std::array<Var, 2> in{x, b};
  const std::size_t ix = x.id(), ib = b.id();
  return x.tape()->Record(std::move(out), in,
                          [ix, ib, n, m](Tape& t, std::size_t self) {
                            const Tensor& g = t.grad(self);
                            t.Accumulate(ix, g);
                            if (t.requires_grad(ib)) {
                              Tensor& gb = t.GradBuffer(ib);
                              for (std::size_t r = 0; r < n; ++r)
                                for (std::size_t c = 0; c < m; ++c)
                                  gb[c] += g.at(r, c);
                            }
                          });
}

Var Relu(Var x) {
  const std::array<Var, 1> in{x};
  const std::size_t ix = x.id();
  return x.tape()->Record(
      Map(x.value(), [](double v) { return v > 0.0 ? v : 0.0; }), in,
      [ix](Tape& t, std::size_t self) {
        Tensor g = t.grad(self);
        const Tensor& xv = t.value(ix);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (!(xv[i] > 0.0)) g[i] = 0.0;
        t.Accumulate(ix, g);
      });
}

Var Tanh(Var x) {
  const std::array<Var, 1> in{x};
  const std::size_t ix = x.id();
  return x.tape()->Record(
      Map(x.value(), [](double v) { return std::tanh(v); }), in,
      [ix](Tape& t, std::size_t self) {
        Tensor g = t.grad(self);
        const Tensor& y = t.value(self);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - y[i] * y[i];
        t.Accumulate(ix, g);
      });
}

Var Sigmoid(Var x) {
  const std::array<Var, 1> in{x};
  const std::size_t ix = x.id();
  return x.tape()->Record(
      Map(x.value(),
          [](double v) {
            if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
          }),
      in, [ix](Tape& t, std::size_t self) {
        Tensor g = t.grad(self);
        const Tensor& y = t.value(self);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= y[i] * (1.0 - y[i]);
        t.Accumulate(ix, g);
      });
}

Var Sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::array<Var, 1> in{x};
  const std::size_t ix = x.id();
  return x.tape()->Record(Tensor::Scalar(s), in, [ix](Tape& t, std::size_t self) {
    t.Accumulate(ix, Tensor(t.value(ix).shape(), t.grad(self)[0]));
  });
}

Var Mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  return Scale(Sum(x), 1.0 / n);
}

Var RowDot(Var a, Var b) {
  RequireSameShape(a, b, "row_dot");
  RequireRank(a, 2, "row_dot");
  const std::size_t n = a.value().dim(0), d = a.value().dim(1);
  Tensor out({n, 1});
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += a.value().at(r, c) * b.value().at(r, c);
    out[r] = s;
  }
  const std::array<Var, 2> in{a, b};
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->Record(std::move(out), in,
                          [ia, ib, n, d](Tape& t, std::size_t self) {
                            const Tensor& g = t.grad(self);
                            if (t.requires_grad(ia)) {
                              Tensor& ga = t.GradBuffer(ia);
                              for (std::size_t r = 0; r < n; ++r)
                                for (std::size_t c = 0; c < d; ++c)
                                  ga.at(r, c) += g[r] * t.value(ib).at(r, c);
                            }
                            if (t.requires_grad(ib)) {
                              Tensor& gb = t.GradBuffer(ib);
                              for (std::size_t r = 0; r < n; ++r)
                                for (std::size_t c = 0; c < d; ++c)
                                  gb.at(r, c) += g[r] * t.value(ia).at(r, c);
                            }
                          });
}

Var L2NormalizeRows(Var x) {
  RequireRank(x, 2, "l2_normalize_rows");
  const std::size_t n = x.value().dim(0), d = x.value().dim(1);
  Tensor out = x.value();
  std::vector<double> norms(n);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += out.at(r, c) * out.at(r, c);
    // Floor keeps an all-zero row finite; such rows stay zero.
    norms[r] = std::max(std::sqrt(s), 1e-12);
    for (std::size_t c = 0; c < d; ++c) out.at(r, c) /= norms[r];
  }
  const std::array<Var, 1> in{x};
  const std::size_t ix = x.id();
  return x.tape()->Record(
      std::move(out), in, [ix, n, d, norms](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& gx = t.GradBuffer(ix);
        for (std::size_t r = 0; r < n; ++r) {
          double dot = 0.0;
          for (std::size_t c = 0; c < d; ++c) dot += g.at(r, c) * y.at(r, c);
          for (std::size_t c = 0; c < d; ++c)
            gx.at(r, c) += (g.at(r, c) - dot * y.at(r, c)) / norms[r];
        }
      });
}

Var ConcatCols(Var a, Var b) {
  RequireRank(a, 2, "concat_cols");
  RequireRank(b, 2, "concat_cols");
  const std::size_t n = a.value().dim(0);
  if (b.value().dim(0) != n) {
    throw DimensionError("concat_cols row mismatch: " + ShapeString(a.shape()) +
                         " vs " + ShapeString(b.shape()));
  }
  const std::size_t ca = a.value().dim(1), cb = b.value().dim(1);
  Tensor out({n, ca + cb});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < ca; ++c) out.at(r, c) = a.value().at(r, c);
    for (std::size_t c = 0; c < cb; ++c) out.at(r, ca + c) = b.value().at(r, c);
  }
  const std::array<Var, 2> in{a, b};
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->Record(std::move(out), in,
                          [ia, ib, n, ca, cb](Tape& t, std::size_t self) {
                            const Tensor& g = t.grad(self);
                            if (t.requires_grad(ia)) {
                              Tensor& ga = t.GradBuffer(ia);
                              for (std::size_t r = 0; r < n; ++r)
                                for (std::size_t c = 0; c < ca; ++c)
                                  ga.at(r, c) += g.at(r, c);
                            }
                            if (t.requires_grad(ib)) {
                              Tensor& gb = t.GradBuffer(ib);
                              for (std::size_t r = 0; r < n; ++r)
                                for (std::size_t c = 0; c < cb; ++c)
                                  gb.at(r, c) += g.at(r, ca + c);
                            }
                          });
}

Var Softmax(Var x, std::size_t axis) {
  RequireRank(x, 2, "softmax");
  if (axis > 1) throw IndexError("softmax axis must be 0 or 1");
  Tensor out = weakmil::Softmax(x.value(), axis);
  const std::array<Var, 1> in{x};
  const std::size_t ix = x.id();
  return x.tape()->Record(std::move(out), in, [ix, axis](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    const std::size_t rows = y.dim(0), cols = y.dim(1);
    Tensor gx(y.shape());
    if (axis == 1) {
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += g.at(r, c) * y.at(r, c);
        for (std::size_t c = 0; c < cols; ++c)
          gx.at(r, c) = y.at(r, c) * (g.at(r, c) - dot);
      }
    } else {
      for (std::size_t c = 0; c < cols; ++c) {
        double dot = 0.0;
        for (std::size_t r = 0; r < rows; ++r) dot += g.at(r, c) * y.at(r, c);
        for (std::size_t r = 0; r < rows; ++r)
          gx.at(r, c) = y.at(r, c) * (g.at(r, c) - dot);
      }
    }
    t.Accumulate(ix, gx);
  });
}

Var CrossEntropyRows(Var logits, std::span<const std::size_t> labels) {
  RequireRank(logits, 2, "cross_entropy");
  const Tensor& z = logits.value();
  const std::size_t n = z.dim(0), k = z.dim(1);
  if (labels.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " rows");
  }
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  Tensor probs({n, k});
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (lab[r] >= k) {
      throw IndexError("label " + std::to_string(lab[r]) + " out of range for " +
                       std::to_string(k) + " classes");
    }
    const std::span<const double> row(z.data().data() + r * k, k);
    const double lse = LogSumExp(row);
    loss += lse - row[lab[r]];
    for (std::size_t c = 0; c < k; ++c) probs.at(r, c) = std::exp(row[c] - lse);
  }
  loss /= static_cast<double>(n);
  const std::array<Var, 1> in{logits};
  const std::size_t il = logits.id();
  return logits.tape()->Record(
      Tensor::Scalar(loss), in,
      [il, probs = std::move(probs), lab = std::move(lab), n, k](
          Tape& t, std::size_t self) {
        const double g = t.grad(self)[0] / static_cast<double>(n);
        Tensor gz = probs;
        for (std::size_t r = 0; r < n; ++r) {
          gz.at(r, lab[r]) -= 1.0;
          for (std::size_t c = 0; c < k; ++c) gz.at(r, c) *= g;
        }
        t.Accumulate(il, gz);
      });
}

Var Conv2dSame(Var x, Var w, Var b) {
  RequireRank(x, 4, "conv2d");
  RequireRank(w, 4, "conv2d");
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  const std::size_t n = xs[0], c_in = xs[1], h = xs[2], wd = xs[3];
  const std::size_t c_out = ws[0], k = ws[2];
  if (ws[1] != c_in || ws[3] != k || k % 2 == 0) {
    throw DimensionError("conv2d kernel " + ShapeString(ws) +
                         " incompatible with input " + ShapeString(xs));
  }
  if (b.value().size() != c_out) {
    throw DimensionError("conv2d bias " + ShapeString(b.shape()) +
                         " does not match " + std::to_string(c_out) +
                         " output channels");
  }
  const long pad = static_cast<long>(k / 2);
  const long H = static_cast<long>(h), W = static_cast<long>(wd);

  Tensor out({n, c_out, h, wd});
  const double* px = x.value().data().data();
  const double* pw = w.value().data().data();
  double* po = out.data().data();
  for (std::size_t in = 0; in < n; ++in) {
    for (std::size_t o = 0; o < c_out; ++o) {
      double* oplane = po + (in * c_out + o) * h * wd;
      std::fill(oplane, oplane + h * wd, b.value()[o]);
      for (std::size_t c = 0; c < c_in; ++c) {
        const double* iplane = px + (in * c_in + c) * h * wd;
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const double wv = pw[((o * c_in + c) * k + ky) * k + kx];
            const long dy = static_cast<long>(ky) - pad;
            const long dx = static_cast<long>(kx) - pad;
            const long x0 = std::max(0L, -dx), x1 = std::min(W, W - dx);
            for (long y = std::max(0L, -dy); y < std::min(H, H - dy); ++y) {
              double* orow = oplane + y * W;
              const double* irow = iplane + (y + dy) * W + dx;
              for (long xx = x0; xx < x1; ++xx) orow[xx] += wv * irow[xx];
            }
          }
        }
      }
    }
  }

  const std::array<Var, 3> in{x, w, b};
  const std::size_t ix = x.id(), iw = w.id(), ib = b.id();
  return x.tape()->Record(std::move(out), in, [=](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data().data();
    const double* xv = t.value(ix).data().data();
    const double* wv_all = t.value(iw).data().data();
    const bool need_x = t.requires_grad(ix);
    const bool need_w = t.requires_grad(iw);
    double* gx = need_x ? t.GradBuffer(ix).data().data() : nullptr;
    double* gw = need_w ? t.GradBuffer(iw).data().data() : nullptr;
    if (t.requires_grad(ib)) {
      Tensor& gb = t.GradBuffer(ib);
      for (std::size_t in = 0; in < n; ++in)
        for (std::size_t o = 0; o < c_out; ++o) {
          const double* gplane = g + (in * c_out + o) * h * wd;
          double s = 0.0;
          for (std::size_t i = 0; i < h * wd; ++i) s += gplane[i];
          gb[o] += s;
        }
    }
    for (std::size_t in = 0; in < n; ++in) {
      for (std::size_t o = 0; o < c_out; ++o) {
        const double* gplane = g + (in * c_out + o) * h * wd;
        for (std::size_t c = 0; c < c_in; ++c) {
          const double* iplane = xv + (in * c_in + c) * h * wd;
          double* giplane = need_x ? gx + (in * c_in + c) * h * wd : nullptr;
          for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::size_t widx = ((o * c_in + c) * k + ky) * k + kx;
              const double wv = wv_all[widx];
              const long dy = static_cast<long>(ky) - pad;
              const long dx = static_cast<long>(kx) - pad;
              const long x0 = std::max(0L, -dx), x1 = std::min(W, W - dx);
              double acc = 0.0;
              for (long y = std::max(0L, -dy); y < std::min(H, H - dy); ++y) {
                const double* grow = gplane + y * W;
                const long src = (y + dy) * W + dx;
                if (need_w) {
                  const double* irow = iplane + src;
                  for (long xx = x0; xx < x1; ++xx) acc += grow[xx] * irow[xx];
                }
                if (need_x) {
                  double* girow = giplane + src;
                  for (long xx = x0; xx < x1; ++xx) girow[xx] += wv * grow[xx];
                }
              }
              if (need_w) gw[widx] += acc;
            }
          }
        }
      }
    }
  });
}

Var AvgPool2(Var x) {
  RequireRank(x, 4, "avg_pool2");
  const Shape& s = x.shape();
  const std::size_t n = s[0], c = s[1], h = s[2], w = s[3];
  if (h % 2 || w % 2) {
    throw DimensionError("avg_pool2 needs even spatial dims, got " +
                         ShapeString(s));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({n, c, oh, ow});
  const double* px = x.value().data().data();
  for (std::size_t p = 0; p < n * c; ++p) {
    const double* ip = px + p * h * w;
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const double* r0 = ip + (2 * y) * w + 2 * xx;
        const double* r1 = r0 + w;
        out[(p * oh + y) * ow + xx] = 0.25 * (r0[0] + r0[1] + r1[0] + r1[1]);
      }
  }
  const std::array<Var, 1> in{x};
  const std::size_t ix = x.id();
  return x.tape()->Record(std::move(out), in, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    double* gx = t.GradBuffer(ix).data().data();
    for (std::size_t p = 0; p < n * c; ++p) {
      double* gp = gx + p * h * w;
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const double v = 0.25 * g[(p * oh + y) * ow + xx];
          double* r0 = gp + (2 * y) * w + 2 * xx;
          double* r1 = r0 + w;
          r0[0] += v;
          r0[1] += v;
          r1[0] += v;
          r1[1] += v;
        }
    }
  });
}

Var GlobalAvgPool(Var x) {
  RequireRank(x, 4, "global_avg_pool");
  const Shape& s = x.shape();
  const std::size_t n = s[0], c = s[1], hw = s[2] * s[3];
  Tensor out({n, c});
  const double* px = x.value().data().data();
  for (std::size_t p = 0; p < n * c; ++p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc += px[p * hw + i];
    out[p] = acc / static_cast<double>(hw);
  }
  const std::array<Var, 1> in{x};
  const std::size_t ix = x.id();
  return x.tape()->Record(std::move(out), in, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    double* gx = t.GradBuffer(ix).data().data();
    for (std::size_t p = 0; p < n * c; ++p) {
      const double v = g[p] / static_cast<double>(hw);
      for (std::size_t i = 0; i < hw; ++i) gx[p * hw + i] += v;
    }
  });
}

}  // namespace weakmil::ag
