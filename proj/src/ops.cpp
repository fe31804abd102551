#include "radiocon/ops.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>

#include <Eigen/Core>

namespace radiocon::ad {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

using NodePtr = std::shared_ptr<Node>;

void accumulate(const NodePtr& node, std::size_t i, float g) {
  if (!node->requires_grad) return;
  node->ensure_grad();
  node->grad[i] += g;
}

float* grad_buffer(const NodePtr& node) {
  if (!node->requires_grad) return nullptr;
  node->ensure_grad();
  return node->grad.data();
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         " tensor, got " + shape_string(t.shape()));
  }
}

float saturate(double v) {
  return static_cast<float>(std::clamp(v, -static_cast<double>(FLT_MAX),
                                       static_cast<double>(FLT_MAX)));
}

// Applies f elementwise, with df(x, y) giving the local derivative from the
// input x and output y.
template <typename F, typename DF>
Tensor unary(Tape& tape, std::string_view kind, const Tensor& x, F f, DF df) {
  std::vector<float> out(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  auto xn = x.node_ptr();
  auto outv = std::make_shared<std::vector<float>>(out);
  const std::array inputs{x};
  return tape.record(kind, x.shape(), std::move(out), inputs,
                     [xn, outv, df](std::span<const float> g) {
                       float* gx = grad_buffer(xn);
                       if (!gx) return;
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         gx[i] += g[i] * df(xn->value[i], (*outv)[i]);
                       }
                     });
}

enum class BinaryKind { add, sub, mul };

Tensor binary(Tape& tape, BinaryKind kind, const Tensor& a, const Tensor& b) {
  const char* name = kind == BinaryKind::add ? "add" : kind == BinaryKind::sub ? "sub" : "mul";
  const bool same = a.shape() == b.shape();
  const bool a_scalar = a.numel() == 1;
  const bool b_scalar = b.numel() == 1;
  if (!same && !a_scalar && !b_scalar) {
    throw DimensionError(std::string(name) + ": incompatible shapes " +
                         shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  const Shape out_shape = (same || b_scalar) ? a.shape() : b.shape();
  const std::size_t n = shape_numel(out_shape);
  auto av = a.values();
  auto bv = b.values();
  auto at = [&](std::size_t i) { return av[a_scalar ? 0 : i]; };
  auto bt = [&](std::size_t i) { return bv[b_scalar ? 0 : i]; };

  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (kind) {
      case BinaryKind::add: out[i] = at(i) + bt(i); break;
      case BinaryKind::sub: out[i] = at(i) - bt(i); break;
      case BinaryKind::mul: out[i] = at(i) * bt(i); break;
    }
  }
  auto an = a.node_ptr();
  auto bn = b.node_ptr();
  const std::array inputs{a, b};
  return tape.record(name, out_shape, std::move(out), inputs,
                     [an, bn, kind, n](std::span<const float> g) {
                       const bool as = an->value.size() == 1 && n != 1;
                       const bool bs = bn->value.size() == 1 && n != 1;
                       for (std::size_t i = 0; i < n; ++i) {
                         float ga = g[i];
                         float gb = kind == BinaryKind::sub ? -g[i] : g[i];
                         if (kind == BinaryKind::mul) {
                           ga = g[i] * bn->value[bs ? 0 : i];
                           gb = g[i] * an->value[as ? 0 : i];
                         }
                         accumulate(an, as ? 0 : i, ga);
                         accumulate(bn, bs ? 0 : i, gb);
                       }
                     });
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  std::vector<float> out(static_cast<std::size_t>(m * n));
  MapMat(out.data(), m, n).noalias() =
      ConstMapMat(a.values().data(), m, k) * ConstMapMat(b.values().data(), k, n);

  auto an = a.node_ptr();
  auto bn = b.node_ptr();
  const std::array inputs{a, b};
  return tape.record("matmul", {a.dim(0), b.dim(1)}, std::move(out), inputs,
                     [an, bn, m, k, n](std::span<const float> g) {
                       ConstMapMat dc(g.data(), m, n);
                       if (float* ga = grad_buffer(an)) {
                         MapMat(ga, m, k).noalias() +=
                             dc * ConstMapMat(bn->value.data(), k, n).transpose();
                       }
                       if (float* gb = grad_buffer(bn)) {
                         MapMat(gb, k, n).noalias() +=
                             ConstMapMat(an->value.data(), m, k).transpose() * dc;
                       }
                     });
}

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& kernels, int stride,
              int padding) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernels, 4, "conv2d kernels");
  if (stride < 1 || padding < 0) {
    throw ParameterError("conv2d: stride must be >= 1 and padding >= 0");
  }
  const auto c_in = static_cast<long>(input.dim(0));
  const auto h = static_cast<long>(input.dim(1));
  const auto w = static_cast<long>(input.dim(2));
  const auto c_out = static_cast<long>(kernels.dim(0));
  const auto kh = static_cast<long>(kernels.dim(2));
  const auto kw = static_cast<long>(kernels.dim(3));
  if (static_cast<long>(kernels.dim(1)) != c_in) {
    throw DimensionError("conv2d: input " + shape_string(input.shape()) +
                         " does not match kernels " + shape_string(kernels.shape()));
  }
  if (kh > h + 2 * padding || kw > w + 2 * padding) {
    throw DimensionError("conv2d: kernels " + shape_string(kernels.shape()) +
                         " exceed padded input " + shape_string(input.shape()));
  }
  const long ho = (h + 2 * padding - kh) / stride + 1;
  const long wo = (w + 2 * padding - kw) / stride + 1;
  const long patch = c_in * kh * kw;
  const long spatial = ho * wo;

  // im2col: one row per (channel, ky, kx), one column per output pixel.
  auto cols = std::make_shared<std::vector<float>>(static_cast<std::size_t>(patch * spatial), 0.0f);
  auto in = input.values();
  for (long c = 0; c < c_in; ++c) {
    for (long ky = 0; ky < kh; ++ky) {
      for (long kx = 0; kx < kw; ++kx) {
        float* dst = cols->data() + ((c * kh + ky) * kw + kx) * spatial;
        for (long oy = 0; oy < ho; ++oy) {
          const long iy = oy * stride + ky - padding;
          if (iy < 0 || iy >= h) continue;
          const float* src = in.data() + (c * h + iy) * w;
          for (long ox = 0; ox < wo; ++ox) {
            const long ix = ox * stride + kx - padding;
            if (ix >= 0 && ix < w) dst[oy * wo + ox] = src[ix];
          }
        }
      }
    }
  }

  std::vector<float> out(static_cast<std::size_t>(c_out * spatial));
  MapMat(out.data(), c_out, spatial).noalias() =
      ConstMapMat(kernels.values().data(), c_out, patch) *
      ConstMapMat(cols->data(), patch, spatial);

  auto xn = input.node_ptr();
  auto kn = kernels.node_ptr();
  const std::array inputs{input, kernels};
  Shape out_shape{static_cast<std::size_t>(c_out), static_cast<std::size_t>(ho),
                  static_cast<std::size_t>(wo)};
  return tape.record(
      "conv2d", std::move(out_shape), std::move(out), inputs,
      [=](std::span<const float> g) {
        ConstMapMat dout(g.data(), c_out, spatial);
        if (float* gk = grad_buffer(kn)) {
          MapMat(gk, c_out, patch).noalias() +=
              dout * ConstMapMat(cols->data(), patch, spatial).transpose();
        }
        float* gx = grad_buffer(xn);
        if (!gx) return;
        RowMat dcols = ConstMapMat(kn->value.data(), c_out, patch).transpose() * dout;
        for (long c = 0; c < c_in; ++c) {
          for (long ky = 0; ky < kh; ++ky) {
            for (long kx = 0; kx < kw; ++kx) {
              const float* src = dcols.data() + ((c * kh + ky) * kw + kx) * spatial;
              for (long oy = 0; oy < ho; ++oy) {
                const long iy = oy * stride + ky - padding;
                if (iy < 0 || iy >= h) continue;
                float* dst = gx + (c * h + iy) * w;
                for (long ox = 0; ox < wo; ++ox) {
                  const long ix = ox * stride + kx - padding;
                  if (ix >= 0 && ix < w) dst[ix] += src[oy * wo + ox];
                }
              }
            }
          }
        }
      });
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(tape, BinaryKind::add, a, b);
}
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(tape, BinaryKind::sub, a, b);
}
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(tape, BinaryKind::mul, a, b);
}

Tensor relu(Tape& tape, const Tensor& x) {
  return unary(
      tape, "relu", x, [](float v) { return v > 0.0f ? v : 0.0f; },
      [](float v, float) { return v > 0.0f ? 1.0f : 0.0f; });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  return unary(
      tape, "sigmoid", x,
      [](float v) {
        const double d = v;
        if (d >= 0.0) return static_cast<float>(1.0 / (1.0 + std::exp(-d)));
        const double e = std::exp(d);
        return static_cast<float>(e / (1.0 + e));
      },
      [](float, float y) { return y * (1.0f - y); });
}

Tensor exp(Tape& tape, const Tensor& x) {
  return unary(
      tape, "exp", x, [](float v) { return saturate(std::exp(static_cast<double>(v))); },
      [](float, float y) { return y; });
}

Tensor log(Tape& tape, const Tensor& x) {
  for (float v : x.values()) {
    if (!(v > 0.0f)) {
      throw DomainError("log: non-positive input " + std::to_string(v));
    }
  }
  return unary(
      tape, "log", x, [](float v) { return static_cast<float>(std::log(static_cast<double>(v))); },
      [](float v, float) { return 1.0f / v; });
}

Tensor scale(Tape& tape, const Tensor& x, float factor) {
  return unary(
      tape, "scale", x, [factor](float v) { return v * factor; },
      [factor](float, float) { return factor; });
}

Tensor clamp(Tape& tape, const Tensor& x, float lo, float hi) {
  if (lo > hi) throw ParameterError("clamp: lo > hi");
  return unary(
      tape, "clamp", x, [lo, hi](float v) { return std::clamp(v, lo, hi); },
      [lo, hi](float v, float) { return (v >= lo && v <= hi) ? 1.0f : 0.0f; });
}

Tensor log_softmax(Tape& tape, const Tensor& logits) {
  if (!logits.defined() || logits.rank() != 1) {
    throw DimensionError("log_softmax: expected a 1-D tensor" +
                         (logits.defined() ? ", got " + shape_string(logits.shape()) : ""));
  }
  auto xv = logits.values();
  double mx = xv[0];
  for (float v : xv) mx = std::max(mx, static_cast<double>(v));
  double acc = 0.0;
  for (float v : xv) acc += std::exp(static_cast<double>(v) - mx);
  const double lse = mx + std::log(acc);

  const std::size_t n = xv.size();
  std::vector<float> out(n);
  auto softmax = std::make_shared<std::vector<double>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = static_cast<double>(xv[i]) - lse;
    out[i] = static_cast<float>(y);
    (*softmax)[i] = std::exp(y);
  }
  auto xn = logits.node_ptr();
  const std::array inputs{logits};
  return tape.record("log_softmax", logits.shape(), std::move(out), inputs,
                     [xn, softmax](std::span<const float> g) {
                       float* gx = grad_buffer(xn);
                       if (!gx) return;
                       double total = 0.0;
                       for (float v : g) total += v;
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         gx[i] += static_cast<float>(g[i] - (*softmax)[i] * total);
                       }
                     });
}

Tensor sum(Tape& tape, const Tensor& x) {
  double acc = 0.0;
  for (float v : x.values()) acc += v;
  auto xn = x.node_ptr();
  const std::array inputs{x};
  return tape.record("sum", {1}, {static_cast<float>(acc)}, inputs,
                     [xn](std::span<const float> g) {
                       float* gx = grad_buffer(xn);
                       if (!gx) return;
                       for (std::size_t i = 0; i < xn->value.size(); ++i) gx[i] += g[0];
                     });
}

Tensor mean(Tape& tape, const Tensor& x) {
  double acc = 0.0;
  for (float v : x.values()) acc += v;
  const double n = static_cast<double>(x.numel());
  auto xn = x.node_ptr();
  const std::array inputs{x};
  return tape.record("mean", {1}, {static_cast<float>(acc / n)}, inputs,
                     [xn, n](std::span<const float> g) {
                       float* gx = grad_buffer(xn);
                       if (!gx) return;
                       const float share = static_cast<float>(g[0] / n);
                       for (std::size_t i = 0; i < xn->value.size(); ++i) gx[i] += share;
                     });
}

Tensor global_avg_pool(Tape& tape, const Tensor& x) {
  require_rank(x, 3, "global_avg_pool");
  const std::size_t c = x.dim(0);
  const std::size_t hw = x.dim(1) * x.dim(2);
  std::vector<float> out(c);
  auto xv = x.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc += xv[ch * hw + i];
    out[ch] = static_cast<float>(acc / static_cast<double>(hw));
  }
  auto xn = x.node_ptr();
  const std::array inputs{x};
  return tape.record("global_avg_pool", {c}, std::move(out), inputs,
                     [xn, c, hw](std::span<const float> g) {
                       float* gx = grad_buffer(xn);
                       if (!gx) return;
                       for (std::size_t ch = 0; ch < c; ++ch) {
                         const float share = g[ch] / static_cast<float>(hw);
                         for (std::size_t i = 0; i < hw; ++i) gx[ch * hw + i] += share;
                       }
                     });
}

Tensor max_pool2d(Tape& tape, const Tensor& x, int window) {
  require_rank(x, 3, "max_pool2d");
  if (window < 1) throw ParameterError("max_pool2d: window must be >= 1");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const auto k = static_cast<std::size_t>(window);
  if (h % k != 0 || w % k != 0) {
    throw DimensionError("max_pool2d: window " + std::to_string(window) +
                         " does not divide spatial extent of " + shape_string(x.shape()));
  }
  const std::size_t ho = h / k, wo = w / k;
  std::vector<float> out(c * ho * wo);
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  auto xv = x.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = (ch * h + oy * k) * w + ox * k;
        for (std::size_t dy = 0; dy < k; ++dy) {
          for (std::size_t dx = 0; dx < k; ++dx) {
            const std::size_t idx = (ch * h + oy * k + dy) * w + ox * k + dx;
            if (xv[idx] > xv[best]) best = idx;
          }
        }
        const std::size_t o = (ch * ho + oy) * wo + ox;
        out[o] = xv[best];
        (*argmax)[o] = best;
      }
    }
  }
  auto xn = x.node_ptr();
  const std::array inputs{x};
  return tape.record("max_pool2d", {c, ho, wo}, std::move(out), inputs,
                     [xn, argmax](std::span<const float> g) {
                       float* gx = grad_buffer(xn);
                       if (!gx) return;
                       for (std::size_t o = 0; o < g.size(); ++o) gx[(*argmax)[o]] += g[o];
                     });
}

Tensor p_norm_distance(Tape& tape, const Tensor& u, const Tensor& v, float p) {
  if (!(p >= 1.0f)) throw ParameterError("p_norm_distance: p must be >= 1");
  if (u.numel() != v.numel()) {
    throw DimensionError("p_norm_distance: length mismatch " + shape_string(u.shape()) +
                         " vs " + shape_string(v.shape()));
  }
  const std::size_t n = u.numel();
  auto uv = u.values();
  auto vv = v.values();
  const double pd = p;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::pow(std::abs(static_cast<double>(uv[i]) - vv[i]), pd);
  }
  const double dist = std::pow(acc, 1.0 / pd);

  auto un = u.node_ptr();
  auto vn = v.node_ptr();
  const std::array inputs{u, v};
  return tape.record("p_norm_distance", {1}, {static_cast<float>(dist)}, inputs,
                     [un, vn, n, pd, dist](std::span<const float> g) {
                       // Zero subgradient at u == v, but still a gradient.
                       grad_buffer(un);
                       grad_buffer(vn);
                       if (dist == 0.0) return;
                       const double denom = std::pow(dist, pd - 1.0);
                       for (std::size_t i = 0; i < n; ++i) {
                         const double diff = static_cast<double>(un->value[i]) - vn->value[i];
                         if (diff == 0.0) continue;
                         const double local = std::copysign(std::pow(std::abs(diff), pd - 1.0), diff) / denom;
                         const auto gi = static_cast<float>(g[0] * local);
                         accumulate(un, i, gi);
                         accumulate(vn, i, -gi);
                       }
                     });
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  auto xn = x.node_ptr();
  const std::array inputs{x};
  std::vector<float> out(x.values().begin(), x.values().end());
  return tape.record("reshape", std::move(shape), std::move(out), inputs,
                     [xn](std::span<const float> g) {
                       float* gx = grad_buffer(xn);
                       if (!gx) return;
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                     });
}

Tensor row(Tape& tape, const Tensor& x, std::size_t index) {
  require_rank(x, 2, "row");
  if (index >= x.dim(0)) {
    throw DimensionError("row: index " + std::to_string(index) + " out of range for " +
                         shape_string(x.shape()));
  }
  const std::size_t n = x.dim(1);
  const std::size_t offset = index * n;
  std::vector<float> out(x.values().begin() + static_cast<long>(offset),
                         x.values().begin() + static_cast<long>(offset + n));
  auto xn = x.node_ptr();
  const std::array inputs{x};
  return tape.record("row", {n}, std::move(out), inputs,
                     [xn, offset](std::span<const float> g) {
                       float* gx = grad_buffer(xn);
                       if (!gx) return;
                       for (std::size_t i = 0; i < g.size(); ++i) gx[offset + i] += g[i];
                     });
}

Tensor pick(Tape& tape, const Tensor& x, std::size_t index) {
  if (index >= x.numel()) {
    throw DimensionError("pick: index " + std::to_string(index) + " out of range for " +
                         shape_string(x.shape()));
  }
  auto xn = x.node_ptr();
  const std::array inputs{x};
  return tape.record("pick", {1}, {x.values()[index]}, inputs,
                     [xn, index](std::span<const float> g) { accumulate(xn, index, g[0]); });
}

Tensor stack(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("stack: no inputs");
  const Shape& part_shape = parts.front().shape();
  const std::size_t part_n = parts.front().numel();
  for (const auto& t : parts) {
    if (t.shape() != part_shape) {
      throw DimensionError("stack: mixed shapes " + shape_string(part_shape) + " and " +
                           shape_string(t.shape()));
    }
  }
  Shape shape{parts.size()};
  if (part_n != 1) shape.insert(shape.end(), part_shape.begin(), part_shape.end());
  std::vector<float> out;
  out.reserve(parts.size() * part_n);
  std::vector<NodePtr> nodes;
  for (const auto& t : parts) {
    out.insert(out.end(), t.values().begin(), t.values().end());
    nodes.push_back(t.node_ptr());
  }
  return tape.record("stack", std::move(shape), std::move(out), parts,
                     [nodes = std::move(nodes), part_n](std::span<const float> g) {
                       for (std::size_t k = 0; k < nodes.size(); ++k) {
                         float* gx = grad_buffer(nodes[k]);
                         if (!gx) continue;
                         for (std::size_t i = 0; i < part_n; ++i) gx[i] += g[k * part_n + i];
                       }
                     });
}

Tensor upsample_nearest(Tape& tape, const Tensor& x, int factor) {
  require_rank(x, 3, "upsample_nearest");
  if (factor < 1) throw ParameterError("upsample_nearest: factor must be >= 1");
  const auto f = static_cast<std::size_t>(factor);
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t ho = h * f, wo = w * f;
  std::vector<float> out(c * ho * wo);
  auto xv = x.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < ho; ++y) {
      for (std::size_t xx = 0; xx < wo; ++xx) {
        out[(ch * ho + y) * wo + xx] = xv[(ch * h + y / f) * w + xx / f];
      }
    }
  }
  auto xn = x.node_ptr();
  const std::array inputs{x};
  return tape.record("upsample_nearest", {c, ho, wo}, std::move(out), inputs,
                     [xn, c, h, w, f](std::span<const float> g) {
                       float* gx = grad_buffer(xn);
                       if (!gx) return;
                       const std::size_t ho = h * f, wo = w * f;
                       for (std::size_t ch = 0; ch < c; ++ch) {
                         for (std::size_t y = 0; y < ho; ++y) {
                           for (std::size_t xx = 0; xx < wo; ++xx) {
                             gx[(ch * h + y / f) * w + xx / f] += g[(ch * ho + y) * wo + xx];
                           }
                         }
                       }
                     });
}

Tensor add_channel_bias(Tape& tape, const Tensor& x, const Tensor& bias) {
  require_rank(x, 3, "add_channel_bias");
  if (bias.numel() != x.dim(0)) {
    throw DimensionError("add_channel_bias: bias " + shape_string(bias.shape()) +
                         " does not match " + shape_string(x.shape()));
  }
  const std::size_t c = x.dim(0);
  const std::size_t hw = x.dim(1) * x.dim(2);
  std::vector<float> out(x.values().begin(), x.values().end());
  auto bv = bias.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < hw; ++i) out[ch * hw + i] += bv[ch];
  }
  auto xn = x.node_ptr();
  auto bn = bias.node_ptr();
  const std::array inputs{x, bias};
  return tape.record("add_channel_bias", x.shape(), std::move(out), inputs,
                     [xn, bn, c, hw](std::span<const float> g) {
                       if (float* gx = grad_buffer(xn)) {
                         for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                       }
                       if (float* gb = grad_buffer(bn)) {
                         for (std::size_t ch = 0; ch < c; ++ch) {
                           double acc = 0.0;
                           for (std::size_t i = 0; i < hw; ++i) acc += g[ch * hw + i];
                           gb[ch] += static_cast<float>(acc);
                         }
                       }
                     });
}

Tensor add_row_bias(Tape& tape, const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_row_bias");
  if (bias.numel() != x.dim(1)) {
    throw DimensionError("add_row_bias: bias " + shape_string(bias.shape()) +
                         " does not match " + shape_string(x.shape()));
  }
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<float> out(x.values().begin(), x.values().end());
  auto bv = bias.values();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] += bv[j];
  }
  auto xn = x.node_ptr();
  auto bn = bias.node_ptr();
  const std::array inputs{x, bias};
  return tape.record("add_row_bias", x.shape(), std::move(out), inputs,
                     [xn, bn, m, n](std::span<const float> g) {
                       if (float* gx = grad_buffer(xn)) {
                         for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                       }
                       if (float* gb = grad_buffer(bn)) {
                         for (std::size_t j = 0; j < n; ++j) {
                           double acc = 0.0;
                           for (std::size_t r = 0; r < m; ++r) acc += g[r * n + j];
                           gb[j] += static_cast<float>(acc);
                         }
                       }
                     });
}

void sgd_step(std::span<const NamedTensor> params, float lr) {
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) {
      throw ContractError("sgd_step: parameter '" + p.name + "' has no gradient");
    }
  }
  for (const auto& p : params) {
    Tensor t = p.tensor;
    auto values = t.mutable_values();
    auto grad = t.mutable_grad();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr * grad[i];
    t.zero_grad();
  }
}

}  // namespace radiocon::ad
