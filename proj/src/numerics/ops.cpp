// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0

#include "slicegate/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <type_traits>

#include "kernels.hpp"

namespace slicegate::numerics {

namespace {

template <typename T>
using NodeT = Node<T>;

void require(bool ok, const std::string& message) {
  if (!ok) throw ShapeError(message);
}

template <typename T>
std::size_t last_dim(const Tensor<T>& x, const char* op) {
  require(x.rank() >= 1, std::string(op) + ": tensor needs at least one axis");
  return x.shape().back();
}

template <typename T>
bool wants(const std::shared_ptr<NodeT<T>>& p) {
  return p->requires_grad;
}

}  // namespace

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  const std::size_t in = last_dim(x, "linear");
  require(weight.rank() == 2 && weight.dim(0) == in,
          "linear: weight " + shape_string(weight.shape()) + " does not accept input " +
              shape_string(x.shape()));
  const std::size_t out = weight.dim(1);
  const bool has_bias = bias.defined();
  if (has_bias) require(bias.size() == out, "linear: bias width mismatch");
  const std::size_t rows = x.size() / in;

  std::vector<T> y(rows * out);
  kernels::gemm_nn(rows, out, in, x.values().data(), in, weight.values().data(), out, y.data(), out,
                   false);
  if (has_bias) {
    auto b = bias.values();
    for (std::size_t r = 0; r < rows; ++r) {
      T* yr = y.data() + r * out;
      for (std::size_t j = 0; j < out; ++j) yr[j] += b[j];
    }
  }
  Shape shape = x.shape();
  shape.back() = out;
  std::vector<Tensor<T>> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return make_result<T>("linear", std::move(shape), std::move(y), std::move(parents),
                        [rows, in, out, has_bias](NodeT<T>& self) {
                          auto& px = self.parents[0];
                          auto& pw = self.parents[1];
                          const T* dy = self.grad.data();
                          if (wants<T>(px)) {
                            std::vector<T> scratch;
                            kernels::gemm_nt(rows, in, out, dy, out, pw->value.data(), out,
                                             px->ensure_grad().data(), in, true, scratch);
                          }
                          if (wants<T>(pw)) {
                            kernels::gemm_tn_acc(rows, out, in, px->value.data(), in, dy, out,
                                                 pw->ensure_grad().data(), out);
                          }
                          if (has_bias && wants<T>(self.parents[2])) {
                            auto& db = self.parents[2]->ensure_grad();
                            for (std::size_t r = 0; r < rows; ++r) {
                              for (std::size_t j = 0; j < out; ++j) db[j] += dy[r * out + j];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(),
          "add: shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
  std::vector<T> y(a.size());
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
  return make_result<T>("add", a.shape(), std::move(y), {a, b}, [](NodeT<T>& self) {
    for (auto& p : self.parents) {
      if (!wants<T>(p)) continue;
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> add_broadcast(const Tensor<T>& x, const Tensor<T>& y) {
  const Shape& xs = x.shape();
  const Shape& ys = y.shape();
  require(ys.size() <= xs.size() && std::equal(ys.rbegin(), ys.rend(), xs.rbegin()),
          "add_broadcast: " + shape_string(ys) + " is not a suffix of " + shape_string(xs));
  const std::size_t inner = y.size();
  const std::size_t outer = x.size() / inner;
  std::vector<T> out(x.size());
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] = xv[o * inner + i] + yv[i];
  }
  return make_result<T>("add_broadcast", xs, std::move(out), {x, y}, [outer, inner](NodeT<T>& self) {
    if (wants<T>(self.parents[0])) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants<T>(self.parents[1])) {
      auto& g = self.parents[1]->ensure_grad();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) g[i] += self.grad[o * inner + i];
      }
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(),
          "mul: shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
  std::vector<T> y(a.size());
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  return make_result<T>("mul", a.shape(), std::move(y), {a, b}, [](NodeT<T>& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants<T>(pa)) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (wants<T>(pb)) {
      auto& g = pb->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
    }
  });
}

template <typename T>
Tensor<T> scale_rows(const Tensor<T>& x, const Tensor<T>& g) {
  const std::size_t d = last_dim(x, "scale_rows");
  const std::size_t rows = x.size() / d;
  require(g.size() == rows && g.shape().back() == 1,
          "scale_rows: gate " + shape_string(g.shape()) + " does not match " + shape_string(x.shape()));
  std::vector<T> y(x.size());
  auto xv = x.values();
  auto gv = g.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < d; ++j) y[r * d + j] = gv[r] * xv[r * d + j];
  }
  return make_result<T>("scale_rows", x.shape(), std::move(y), {x, g}, [rows, d](NodeT<T>& self) {
    auto& px = self.parents[0];
    auto& pg = self.parents[1];
    if (wants<T>(px)) {
      auto& gx = px->ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += self.grad[r * d + j] * pg->value[r];
      }
    }
    if (wants<T>(pg)) {
      auto& gg = pg->ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        T acc = 0;
        for (std::size_t j = 0; j < d; ++j) acc += self.grad[r * d + j] * px->value[r * d + j];
        gg[r] += acc;
      }
    }
  });
}

template <typename T>
Tensor<T> affine(const Tensor<T>& x, T alpha, T beta) {
  std::vector<T> y(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = alpha * xv[i] + beta;
  return make_result<T>("affine", x.shape(), std::move(y), {x}, [alpha](NodeT<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += alpha * self.grad[i];
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, double eps) {
  const std::size_t d = last_dim(x, "layer_norm");
  require(gain.size() == d && bias.size() == d, "layer_norm: affine parameters must have width " +
                                                    std::to_string(d));
  const std::size_t rows = x.size() / d;
  std::vector<T> y(x.size());
  std::vector<T> xhat(x.size());
  std::vector<T> rstd(rows);
  auto xv = x.values();
  auto gv = gain.values();
  auto bv = bias.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xv.data() + r * d;
    T mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + static_cast<T>(eps));
    rstd[r] = rs;
    for (std::size_t j = 0; j < d; ++j) {
      const T h = (xr[j] - mu) * rs;
      xhat[r * d + j] = h;
      y[r * d + j] = h * gv[j] + bv[j];
    }
  }
  return make_result<T>(
      "layer_norm", x.shape(), std::move(y), {x, gain, bias},
      [rows, d, xhat = std::move(xhat), rstd = std::move(rstd)](NodeT<T>& self) {
        auto& px = self.parents[0];
        auto& pg = self.parents[1];
        auto& pb = self.parents[2];
        const T* dy = self.grad.data();
        if (wants<T>(pg) || wants<T>(pb)) {
          auto& dg = pg->ensure_grad();
          auto& db = pb->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < d; ++j) {
              dg[j] += dy[r * d + j] * xhat[r * d + j];
              db[j] += dy[r * d + j];
            }
          }
        }
        if (wants<T>(px)) {
          auto& dx = px->ensure_grad();
          const auto& gv = pg->value;
          for (std::size_t r = 0; r < rows; ++r) {
            T mean_dh = 0;
            T mean_dh_h = 0;
            for (std::size_t j = 0; j < d; ++j) {
              const T dh = dy[r * d + j] * gv[j];
              mean_dh += dh;
              mean_dh_h += dh * xhat[r * d + j];
            }
            mean_dh /= static_cast<T>(d);
            mean_dh_h /= static_cast<T>(d);
            for (std::size_t j = 0; j < d; ++j) {
              const T dh = dy[r * d + j] * gv[j];
              dx[r * d + j] += rstd[r] * (dh - mean_dh - xhat[r * d + j] * mean_dh_h);
            }
          }
        }
      });
}

namespace {

// Rational approximation of erf for 32-bit inputs, max abs error 4.3e-7
// against the 64-bit erf. Unlike the libm call it vectorises.
float erf_f32(float a) {
  const float x = std::clamp(a, -4.0f, 4.0f);
  const float x2 = x * x;
  float p = x2 * -2.72614225801306e-10f + 2.77068142495902e-08f;
  p = x2 * p + -2.10102402082508e-06f;
  p = x2 * p + -5.69250639462346e-05f;
  p = x2 * p + -7.34990630326855e-04f;
  p = x2 * p + -2.95459980854025e-03f;
  p = x2 * p + -1.60960333262415e-02f;
  float q = x2 * -1.45660718464996e-05f + -2.13374055278905e-04f;
  q = x2 * q + -1.68282697438203e-03f;
  q = x2 * q + -7.37332916720468e-03f;
  q = x2 * q + -1.42647390514189e-02f;
  return x * p / q;
}

}  // namespace

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  auto xv = x.values();
  const T inv_sqrt2 = static_cast<T>(1.0 / std::numbers::sqrt2);
  std::vector<T> cdf(x.size()), y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if constexpr (std::is_same_v<T, float>) {
      cdf[i] = 0.5f * (1.0f + erf_f32(xv[i] * inv_sqrt2));
    } else {
      cdf[i] = T(0.5) * (T(1) + std::erf(xv[i] * inv_sqrt2));
    }
    y[i] = xv[i] * cdf[i];
  }
  return make_result<T>("gelu", x.shape(), std::move(y), {x}, [cdf = std::move(cdf)](NodeT<T>& self) {
    auto& px = self.parents[0];
    auto& g = px->ensure_grad();
    const T inv_sqrt_2pi = static_cast<T>(1.0 / std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T v = px->value[i];
      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
      g[i] += self.grad[i] * (cdf[i] + v * pdf);
    }
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> y(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const T v = xv[i];
    if (v >= 0) {
      y[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      y[i] = e / (T(1) + e);
    }
  }
  return make_result<T>("sigmoid", x.shape(), y, {x}, [y](NodeT<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Tensor<T> scaled_dot_product_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                       std::size_t heads, const AttentionMask* mask) {
  require(q.rank() == 3 && q.shape() == k.shape() && q.shape() == v.shape(),
          "attention: q, k, v must share a [B, S, D] shape, got " + shape_string(q.shape()));
  const std::size_t batch = q.dim(0);
  const std::size_t seq = q.dim(1);
  const std::size_t width = q.dim(2);
  require(seq >= 1, "attention: empty sequence");
  require(heads >= 1 && width % heads == 0,
          "attention: width " + std::to_string(width) + " not divisible by " + std::to_string(heads) +
              " heads");
  if (mask) {
    require(mask->seq == seq && mask->blocked.size() == seq * seq, "attention: mask size mismatch");
  }
  const std::size_t dh = width / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  std::vector<T> out(q.size());
  std::vector<T> probs(batch * heads * seq * seq);
  std::vector<T> scratch;
  const T* qv = q.values().data();
  const T* kv = k.values().data();
  const T* vv = v.values().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = b * seq * width + h * dh;
      T* p = probs.data() + (b * heads + h) * seq * seq;
      kernels::gemm_nt(seq, seq, dh, qv + off, width, kv + off, width, p, seq, false, scratch);
      for (std::size_t i = 0; i < seq; ++i) {
        T* row = p + i * seq;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < seq; ++j) {
          if (mask && mask->blocked[i * seq + j]) continue;
          row[j] *= scale;
          mx = std::max(mx, row[j]);
        }
        if (!std::isfinite(mx)) throw NumericError("attention: every key is masked for a query");
        T denom = 0;
        for (std::size_t j = 0; j < seq; ++j) {
          if (mask && mask->blocked[i * seq + j]) {
            row[j] = 0;
          } else {
            row[j] = std::exp(row[j] - mx);
            denom += row[j];
          }
        }
        for (std::size_t j = 0; j < seq; ++j) row[j] /= denom;
      }
      kernels::gemm_nn(seq, dh, seq, p, seq, vv + off, width, out.data() + off, width, false);
    }
  }
  return make_result<T>(
      "attention", q.shape(), std::move(out), {q, k, v},
      [batch, seq, width, heads, dh, scale, probs = std::move(probs)](NodeT<T>& self) {
        auto& pq = self.parents[0];
        auto& pk = self.parents[1];
        auto& pv = self.parents[2];
        std::vector<T> dp(seq * seq);
        std::vector<T> scratch;
        T* dq = wants<T>(pq) ? pq->ensure_grad().data() : nullptr;
        T* dk = wants<T>(pk) ? pk->ensure_grad().data() : nullptr;
        T* dv = wants<T>(pv) ? pv->ensure_grad().data() : nullptr;
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = b * seq * width + h * dh;
            const T* p = probs.data() + (b * heads + h) * seq * seq;
            const T* dout = self.grad.data() + off;
            if (dv) kernels::gemm_tn_acc(seq, dh, seq, p, seq, dout, width, dv + off, width);
            if (!dq && !dk) continue;
            kernels::gemm_nt(seq, seq, dh, dout, width, pv->value.data() + off, width, dp.data(), seq,
                             false, scratch);
            for (std::size_t i = 0; i < seq; ++i) {
              T dot = 0;
              for (std::size_t j = 0; j < seq; ++j) dot += dp[i * seq + j] * p[i * seq + j];
              for (std::size_t j = 0; j < seq; ++j) {
                dp[i * seq + j] = p[i * seq + j] * (dp[i * seq + j] - dot) * scale;
              }
            }
            if (dq) {
              kernels::gemm_nn(seq, dh, seq, dp.data(), seq, pk->value.data() + off, width, dq + off,
                               width, true);
            }
            if (dk) {
              kernels::gemm_tn_acc(seq, dh, seq, dp.data(), seq, pq->value.data() + off, width,
                                   dk + off, width);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> drop_path(const Tensor<T>& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("drop_path: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  require(x.rank() >= 1, "drop_path: tensor needs a leading sample axis");
  const std::size_t samples = x.dim(0);
  const std::size_t inner = x.size() / std::max<std::size_t>(samples, 1);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> factor(samples);
  for (std::size_t s = 0; s < samples; ++s) factor[s] = rng.uniform() < rate ? T(0) : keep_scale;
  std::vector<T> y(x.size());
  auto xv = x.values();
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < inner; ++i) y[s * inner + i] = xv[s * inner + i] * factor[s];
  }
  return make_result<T>("drop_path", x.shape(), std::move(y), {x},
                        [inner, factor = std::move(factor)](NodeT<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t s = 0; s < factor.size(); ++s) {
                            for (std::size_t i = 0; i < inner; ++i) {
                              g[s * inner + i] += self.grad[s * inner + i] * factor[s];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  require(shape_numel(shape) == x.size(),
          "reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  auto xv = x.values();
  return make_result<T>("reshape", std::move(shape), std::vector<T>(xv.begin(), xv.end()), {x},
                        [](NodeT<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                        });
}

template <typename T>
Tensor<T> swap_axes(const Tensor<T>& x, std::size_t axis) {
  const Shape& xs = x.shape();
  require(axis + 1 < xs.size(), "swap_axes: axis out of range for " + shape_string(xs));
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= xs[i];
  const std::size_t a = xs[axis];
  const std::size_t b = xs[axis + 1];
  std::size_t inner = 1;
  for (std::size_t i = axis + 2; i < xs.size(); ++i) inner *= xs[i];
  Shape out_shape = xs;
  std::swap(out_shape[axis], out_shape[axis + 1]);
  std::vector<T> y(x.size());
  auto xv = x.values();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        const T* src = xv.data() + ((o * a + i) * b + j) * inner;
        T* dst = y.data() + ((o * b + j) * a + i) * inner;
        std::copy(src, src + inner, dst);
      }
    }
  }
  return make_result<T>("swap_axes", std::move(out_shape), std::move(y), {x},
                        [outer, a, b, inner](NodeT<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t o = 0; o < outer; ++o) {
                            for (std::size_t i = 0; i < a; ++i) {
                              for (std::size_t j = 0; j < b; ++j) {
                                T* dst = g.data() + ((o * a + i) * b + j) * inner;
                                const T* src = self.grad.data() + ((o * b + j) * a + i) * inner;
                                for (std::size_t t = 0; t < inner; ++t) dst[t] += src[t];
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> select(const Tensor<T>& x, std::size_t axis, std::size_t index) {
  const Shape& xs = x.shape();
  require(axis < xs.size() && index < xs[axis], "select: index out of range for " + shape_string(xs));
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= xs[i];
  const std::size_t n = xs[axis];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < xs.size(); ++i) inner *= xs[i];
  Shape out_shape;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i != axis) out_shape.push_back(xs[i]);
  }
  std::vector<T> y(outer * inner);
  auto xv = x.values();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(xv.data() + (o * n + index) * inner, inner, y.data() + o * inner);
  }
  return make_result<T>("select", std::move(out_shape), std::move(y), {x},
                        [outer, n, inner, index](NodeT<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t o = 0; o < outer; ++o) {
                            T* dst = g.data() + (o * n + index) * inner;
                            const T* src = self.grad.data() + o * inner;
                            for (std::size_t t = 0; t < inner; ++t) dst[t] += src[t];
                          }
                        });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts) {
  require(!parts.empty(), "concat: no inputs");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t lead = 0;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p.rank() >= 1 && Shape(p.shape().begin() + 1, p.shape().end()) == tail,
            "concat: trailing shapes differ");
    lead += p.dim(0);
    total += p.size();
  }
  std::vector<T> y;
  y.reserve(total);
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(y.size());
    auto pv = p.values();
    y.insert(y.end(), pv.begin(), pv.end());
  }
  Shape shape = tail;
  shape.insert(shape.begin(), lead);
  return make_result<T>("concat", std::move(shape), std::move(y), parts,
                        [offsets = std::move(offsets)](NodeT<T>& self) {
                          for (std::size_t i = 0; i < self.parents.size(); ++i) {
                            auto& p = self.parents[i];
                            if (!wants<T>(p)) continue;
                            auto& g = p->ensure_grad();
                            for (std::size_t t = 0; t < g.size(); ++t) g[t] += self.grad[offsets[i] + t];
                          }
                        });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, std::span<const std::size_t> indices) {
  require(table.rank() == 2, "gather_rows: table must be 2-D");
  const std::size_t rows = table.dim(0);
  const std::size_t d = table.dim(1);
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  std::vector<T> y(idx.size() * d);
  auto tv = table.values();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] < rows, "gather_rows: row index out of range");
    std::copy_n(tv.data() + idx[i] * d, d, y.data() + i * d);
  }
  return make_result<T>("gather_rows", Shape{idx.size(), d}, std::move(y), {table},
                        [d, idx](NodeT<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t i = 0; i < idx.size(); ++i) {
                            for (std::size_t j = 0; j < d; ++j) g[idx[i] * d + j] += self.grad[i * d + j];
                          }
                        });
}

template <typename T>
Tensor<T> film(const Tensor<T>& x, const Tensor<T>& scale, const Tensor<T>& shift) {
  require(x.rank() == 3, "film: input must be [B, L, D]");
  const std::size_t batch = x.dim(0);
  const std::size_t len = x.dim(1);
  const std::size_t d = x.dim(2);
  require(scale.shape() == Shape({batch, d}) && shift.shape() == Shape({batch, d}),
          "film: modulation must be [" + std::to_string(batch) + ", " + std::to_string(d) + "]");
  std::vector<T> y(x.size());
  auto xv = x.values();
  auto sv = scale.values();
  auto tv = shift.values();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < len; ++l) {
      const std::size_t row = (b * len + l) * d;
      for (std::size_t j = 0; j < d; ++j) {
        y[row + j] = xv[row + j] * (T(1) + sv[b * d + j]) + tv[b * d + j];
      }
    }
  }
  return make_result<T>("film", x.shape(), std::move(y), {x, scale, shift},
                        [batch, len, d](NodeT<T>& self) {
                          auto& px = self.parents[0];
                          auto& ps = self.parents[1];
                          auto& pt = self.parents[2];
                          T* gx = wants<T>(px) ? px->ensure_grad().data() : nullptr;
                          T* gs = wants<T>(ps) ? ps->ensure_grad().data() : nullptr;
                          T* gt = wants<T>(pt) ? pt->ensure_grad().data() : nullptr;
                          for (std::size_t b = 0; b < batch; ++b) {
                            for (std::size_t l = 0; l < len; ++l) {
                              const std::size_t row = (b * len + l) * d;
                              for (std::size_t j = 0; j < d; ++j) {
                                const T dy = self.grad[row + j];
                                if (gx) gx[row + j] += dy * (T(1) + ps->value[b * d + j]);
                                if (gs) gs[b * d + j] += dy * px->value[row + j];
                                if (gt) gt[b * d + j] += dy;
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> unpatchify(const Tensor<T>& x, std::size_t rows, std::size_t cols, std::size_t patch) {
  require(x.rank() == 3 && x.dim(1) == rows * cols && x.dim(2) == patch * patch,
          "unpatchify: expected [B, " + std::to_string(rows * cols) + ", " +
              std::to_string(patch * patch) + "], got " + shape_string(x.shape()));
  const std::size_t batch = x.dim(0);
  const std::size_t height = rows * patch;
  const std::size_t width = cols * patch;
  // index[pixel] = source offset within one sample
  std::vector<std::size_t> index(height * width);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t py = 0; py < patch; ++py) {
        for (std::size_t px = 0; px < patch; ++px) {
          index[(r * patch + py) * width + c * patch + px] = (r * cols + c) * patch * patch + py * patch + px;
        }
      }
    }
  }
  std::vector<T> y(x.size());
  auto xv = x.values();
  const std::size_t per = height * width;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < per; ++i) y[b * per + i] = xv[b * per + index[i]];
  }
  return make_result<T>("unpatchify", Shape{batch, height, width}, std::move(y), {x},
                        [batch, per, index = std::move(index)](NodeT<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t b = 0; b < batch; ++b) {
                            for (std::size_t i = 0; i < per; ++i) g[b * per + index[i]] += self.grad[b * per + i];
                          }
                        });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.values()) acc += v;
  return make_result<T>("sum", Shape{}, std::vector<T>{acc}, {x}, [](NodeT<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (auto& gi : g) gi += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  require(x.size() > 0, "mean: empty tensor");
  T acc = 0;
  for (T v : x.values()) acc += v;
  const T n = static_cast<T>(x.size());
  return make_result<T>("mean", Shape{}, std::vector<T>{acc / n}, {x}, [n](NodeT<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (auto& gi : g) gi += self.grad[0] / n;
  });
}

template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& target) {
  require(logits.shape() == target.shape(), "bce: logits " + shape_string(logits.shape()) +
                                                " vs target " + shape_string(target.shape()));
  require(logits.size() > 0, "bce: empty input");
  auto xv = logits.values();
  auto tv = target.values();
  T acc = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const T x = xv[i];
    acc += std::max(x, T(0)) - x * tv[i] + std::log1p(std::exp(-std::abs(x)));
  }
  const T n = static_cast<T>(xv.size());
  return make_result<T>("bce", Shape{}, std::vector<T>{acc / n}, {logits, target}, [n](NodeT<T>& self) {
    auto& px = self.parents[0];
    auto& pt = self.parents[1];
    if (!wants<T>(px)) return;
    auto& g = px->ensure_grad();
    const T scale = self.grad[0] / n;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T x = px->value[i];
      const T s = x >= 0 ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
      g[i] += scale * (s - pt->value[i]);
    }
  });
}

template <typename T>
Tensor<T> soft_dice_loss(const Tensor<T>& probs, const Tensor<T>& target, double smooth) {
  require(probs.shape() == target.shape(), "dice: probs " + shape_string(probs.shape()) +
                                               " vs target " + shape_string(target.shape()));
  require(probs.size() > 0, "dice: empty input");
  const std::size_t samples = probs.rank() >= 3 ? probs.dim(0) : 1;
  const std::size_t per = probs.size() / samples;
  const T s = static_cast<T>(smooth);
  auto pv = probs.values();
  auto tv = target.values();
  std::vector<T> inter(samples), denom(samples);
  T loss = 0;
  for (std::size_t b = 0; b < samples; ++b) {
    T i_acc = 0, p_acc = 0, t_acc = 0;
    for (std::size_t i = 0; i < per; ++i) {
      i_acc += pv[b * per + i] * tv[b * per + i];
      p_acc += pv[b * per + i];
      t_acc += tv[b * per + i];
    }
    inter[b] = i_acc;
    denom[b] = p_acc + t_acc + s;
    loss += T(1) - (T(2) * i_acc + s) / denom[b];
  }
  const T count = static_cast<T>(samples);
  return make_result<T>(
      "dice", Shape{}, std::vector<T>{loss / count}, {probs, target},
      [samples, per, s, count, inter = std::move(inter), denom = std::move(denom)](NodeT<T>& self) {
        auto& pp = self.parents[0];
        auto& pt = self.parents[1];
        if (!wants<T>(pp)) return;
        auto& g = pp->ensure_grad();
        const T up = self.grad[0] / count;
        for (std::size_t b = 0; b < samples; ++b) {
          const T num = T(2) * inter[b] + s;
          const T den2 = denom[b] * denom[b];
          for (std::size_t i = 0; i < per; ++i) {
            const T t = pt->value[b * per + i];
            g[b * per + i] += up * -(T(2) * t * denom[b] - num) / den2;
          }
        }
      });
}

#define SLICEGATE_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> add_broadcast(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> scale_rows(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> affine(const Tensor<T>&, T, T);                                              \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double);    \
  template Tensor<T> gelu(const Tensor<T>&);                                                      \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                   \
  template Tensor<T> scaled_dot_product_attention(const Tensor<T>&, const Tensor<T>&,             \
                                                  const Tensor<T>&, std::size_t,                  \
                                                  const AttentionMask*);                          \
  template Tensor<T> drop_path(const Tensor<T>&, double, bool, Rng&);                             \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                            \
  template Tensor<T> swap_axes(const Tensor<T>&, std::size_t);                                    \
  template Tensor<T> select(const Tensor<T>&, std::size_t, std::size_t);                          \
  template Tensor<T> concat(const std::vector<Tensor<T>>&);                                       \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);                 \
  template Tensor<T> film(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> unpatchify(const Tensor<T>&, std::size_t, std::size_t, std::size_t);         \
  template Tensor<T> sum(const Tensor<T>&);                                                       \
  template Tensor<T> mean(const Tensor<T>&);                                                      \
  template Tensor<T> bce_with_logits(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> soft_dice_loss(const Tensor<T>&, const Tensor<T>&, double);

SLICEGATE_INSTANTIATE_OPS(float)
SLICEGATE_INSTANTIATE_OPS(double)

}  // namespace slicegate::numerics
