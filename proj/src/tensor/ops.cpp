#include "hrpose/ops.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace hrpose {

namespace {

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  const Shape& x = a.shape();
  const Shape& y = b.shape();
  if (x.n != y.n) throw ShapeError(op, "n", x.n, y.n);
  if (x.c != y.c) throw ShapeError(op, "channels", x.c, y.c);
  if (x.h != y.h) throw ShapeError(op, "height", x.h, y.h);
  if (x.w != y.w) throw ShapeError(op, "width", x.w, y.w);
  if (a.dtype() != b.dtype()) throw std::invalid_argument(std::string(op) + ": dtype mismatch");
}

struct ConvGeometry {
  int n, cin, h, w;
  int cout, kh, kw;
  int stride, pad;
  int ho, wo;

  std::int64_t patch() const { return std::int64_t{cin} * kh * kw; }
  std::int64_t out_plane() const { return std::int64_t{ho} * wo; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

// Output columns [lo, hi) whose input column ox * stride - pad + d is in range.
std::pair<int, int> valid_columns(const ConvGeometry& g, int d) {
  const int off = g.pad - d;
  int lo = off > 0 ? (off + g.stride - 1) / g.stride : 0;
  int hi = (g.w - 1 + off) >= 0 ? (g.w - 1 + off) / g.stride + 1 : 0;
  lo = std::min(lo, g.wo);
  hi = std::clamp(hi, lo, g.wo);
  return {lo, hi};
}

template <typename T>
void im2col(const ConvGeometry& g, const T* in, T* col) {
  const std::int64_t plane = g.out_plane();
  for (int ci = 0; ci < g.cin; ++ci) {
    const T* src = in + std::int64_t{ci} * g.h * g.w;
    for (int dy = 0; dy < g.kh; ++dy) {
      for (int dx = 0; dx < g.kw; ++dx) {
        T* dst = col + ((std::int64_t{ci} * g.kh + dy) * g.kw + dx) * plane;
        const auto [lo, hi] = valid_columns(g, dx);
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + dy;
          T* row = dst + std::int64_t{oy} * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(row, row + g.wo, T(0));
            continue;
          }
          const T* srow = src + std::int64_t{iy} * g.w;
          const int shift = dx - g.pad;
          std::fill(row, row + lo, T(0));
          if (g.stride == 1) {
            if (hi > lo) std::copy(srow + lo + shift, srow + hi + shift, row + lo);
          } else {
            for (int ox = lo; ox < hi; ++ox) row[ox] = srow[ox * g.stride + shift];
          }
          std::fill(row + hi, row + g.wo, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvGeometry& g, const T* col, T* in) {
  const std::int64_t plane = g.out_plane();
  for (int ci = 0; ci < g.cin; ++ci) {
    T* dst = in + std::int64_t{ci} * g.h * g.w;
    for (int dy = 0; dy < g.kh; ++dy) {
      for (int dx = 0; dx < g.kw; ++dx) {
        const T* src = col + ((std::int64_t{ci} * g.kh + dy) * g.kw + dx) * plane;
        const auto [lo, hi] = valid_columns(g, dx);
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + dy;
          if (iy < 0 || iy >= g.h) continue;
          T* drow = dst + std::int64_t{iy} * g.w;
          const int shift = dx - g.pad;
          const T* row = src + std::int64_t{oy} * g.wo;
          if (g.stride == 1) {
#pragma omp simd
            for (int ox = lo; ox < hi; ++ox) drow[ox + shift] += row[ox];
          } else {
            for (int ox = lo; ox < hi; ++ox) drow[ox * g.stride + shift] += row[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void conv_forward(const ConvGeometry& g, const T* in, const T* wt, const T* bias, T* out) {
  std::vector<T> col;
  if (!g.pointwise()) col.resize(static_cast<std::size_t>(g.patch() * g.out_plane()));
  for (int b = 0; b < g.n; ++b) {
    const T* src = in + std::int64_t{b} * g.cin * g.h * g.w;
    T* dst = out + std::int64_t{b} * g.cout * g.out_plane();
    const T* cols = src;
    if (!g.pointwise()) {
      im2col(g, src, col.data());
      cols = col.data();
    }
    if (bias) {
      for (int co = 0; co < g.cout; ++co) {
        T* row = dst + co * g.out_plane();
        for (std::int64_t p = 0; p < g.out_plane(); ++p) row[p] = bias[co];
      }
    }
    kernels::gemm_nn<T>(g.cout, static_cast<int>(g.out_plane()), static_cast<int>(g.patch()), wt,
                        cols, dst);
  }
}

template <typename T>
void conv_backward(const ConvGeometry& g, const T* in, const T* wt, const T* gout, T* gin, T* gw,
                   T* gb) {
  std::vector<T> col;
  std::vector<T> gcol;
  const bool pw = g.pointwise();
  if (!pw && (gw || gin)) {
    col.resize(static_cast<std::size_t>(g.patch() * g.out_plane()));
    gcol.resize(col.size());
  }
  const int plane = static_cast<int>(g.out_plane());
  const int patch = static_cast<int>(g.patch());
  for (int b = 0; b < g.n; ++b) {
    const T* src = in + std::int64_t{b} * g.cin * g.h * g.w;
    const T* go = gout + std::int64_t{b} * g.cout * plane;
    if (gb) {
      for (int co = 0; co < g.cout; ++co) {
        const T* row = go + std::int64_t{co} * plane;
        T s = 0;
        for (int p = 0; p < plane; ++p) s += row[p];
        gb[co] += s;
      }
    }
    if (gw) {
      const T* cols = src;
      if (!pw) {
        im2col(g, src, col.data());
        cols = col.data();
      }
      kernels::gemm_nt<T>(g.cout, patch, plane, go, cols, gw);
    }
    if (gin) {
      T* gi = gin + std::int64_t{b} * g.cin * g.h * g.w;
      if (pw) {
        kernels::gemm_tn<T>(patch, plane, g.cout, wt, go, gi);
      } else {
        std::fill(gcol.begin(), gcol.end(), T(0));
        kernels::gemm_tn<T>(patch, plane, g.cout, wt, go, gcol.data());
        col2im(g, gcol.data(), gi);
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              Conv2dOptions options) {
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  if (ws.c != is.c) throw ShapeError("conv2d", "weight.in_channels", is.c, ws.c);
  if (options.stride < 1) throw ShapeError("conv2d", "stride", 1, options.stride);
  if (options.padding < 0) throw ShapeError("conv2d", "padding", 0, options.padding);
  if (weight.dtype() != input.dtype()) throw std::invalid_argument("conv2d: dtype mismatch");
  if (bias.defined()) {
    if (bias.numel() != ws.n) throw ShapeError("conv2d", "bias.length", ws.n, bias.numel());
    if (bias.dtype() != input.dtype()) throw std::invalid_argument("conv2d: dtype mismatch");
  }
  const int span_h = is.h + 2 * options.padding - ws.h;
  const int span_w = is.w + 2 * options.padding - ws.w;
  if (span_h < 0) throw ShapeError("conv2d", "input.height", ws.h - 2 * options.padding, is.h);
  if (span_w < 0) throw ShapeError("conv2d", "input.width", ws.w - 2 * options.padding, is.w);

  ConvGeometry g{is.n, is.c, is.h, is.w, ws.n, ws.h, ws.w, options.stride, options.padding,
                 span_h / options.stride + 1, span_w / options.stride + 1};
  Tensor out = Tensor::zeros({g.n, g.cout, g.ho, g.wo}, input.dtype());
  dispatch(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    conv_forward<T>(g, input.data<T>(), weight.data<T>(),
                    bias.defined() ? bias.data<T>() : nullptr, out.data<T>());
  });

  attach_grad(out, "conv2d", {input, weight, bias}, [g, input, weight, bias](const Tensor& gout) {
    Tensor gin, gw, gb;
    if (input.requires_grad()) gin = Tensor::zeros(input.shape(), input.dtype());
    if (weight.requires_grad()) gw = Tensor::zeros(weight.shape(), weight.dtype());
    if (bias.defined() && bias.requires_grad()) gb = Tensor::zeros(bias.shape(), bias.dtype());
    dispatch(input.dtype(), [&](auto tag) {
      using T = decltype(tag);
      conv_backward<T>(g, input.data<T>(), weight.data<T>(), gout.data<T>(),
                       gin.defined() ? gin.data<T>() : nullptr,
                       gw.defined() ? gw.data<T>() : nullptr,
                       gb.defined() ? gb.data<T>() : nullptr);
    });
    return std::vector<Tensor>{gin, gw, gb};
  });
  return out;
}

Tensor batch_norm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                    Tensor& running_mean, Tensor& running_var, BatchNormOptions options) {
  const Shape& s = input.shape();
  const Tensor* per_channel[] = {&gamma, &beta, &running_mean, &running_var};
  const char* names[] = {"gamma.length", "beta.length", "running_mean.length",
                         "running_var.length"};
  for (int i = 0; i < 4; ++i) {
    if (per_channel[i]->numel() != s.c) throw ShapeError("batch_norm2d", names[i], s.c,
                                                         per_channel[i]->numel());
    if (per_channel[i]->dtype() != input.dtype()) {
      throw std::invalid_argument("batch_norm2d: dtype mismatch");
    }
  }
  if (!(options.eps > 0.0)) throw std::invalid_argument("batch_norm2d: eps must be positive");

  const std::int64_t plane = s.plane();
  const std::int64_t count = std::int64_t{s.n} * plane;
  const bool train = options.mode == BatchNormMode::kTrain;
  Tensor out = Tensor::zeros(s, input.dtype());
  // Per-channel normalised input and 1/sqrt(var + eps), kept for backward.
  Tensor xhat = Tensor::zeros(s, input.dtype());
  Tensor inv_std = Tensor::zeros({1, s.c, 1, 1}, input.dtype());

  dispatch(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* x = input.data<T>();
    const T* ga = gamma.data<T>();
    const T* be = beta.data<T>();
    T* rm = running_mean.data<T>();
    T* rv = running_var.data<T>();
    T* y = out.data<T>();
    T* xh = xhat.data<T>();
    T* is = inv_std.data<T>();
    for (int c = 0; c < s.c; ++c) {
      double mean, var;
      if (train) {
        double acc = 0.0;
        for (int b = 0; b < s.n; ++b) {
          const T* p = x + (std::int64_t{b} * s.c + c) * plane;
          for (std::int64_t i = 0; i < plane; ++i) acc += p[i];
        }
        mean = acc / static_cast<double>(count);
        double sq = 0.0;
        for (int b = 0; b < s.n; ++b) {
          const T* p = x + (std::int64_t{b} * s.c + c) * plane;
          for (std::int64_t i = 0; i < plane; ++i) {
            const double d = p[i] - mean;
            sq += d * d;
          }
        }
        var = sq / static_cast<double>(count);
        const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
        rm[c] = static_cast<T>((1.0 - options.momentum) * rm[c] + options.momentum * mean);
        rv[c] = static_cast<T>((1.0 - options.momentum) * rv[c] + options.momentum * unbiased);
      } else {
        mean = rm[c];
        var = rv[c];
      }
      const double inv = 1.0 / std::sqrt(var + options.eps);
      is[c] = static_cast<T>(inv);
      for (int b = 0; b < s.n; ++b) {
        const std::int64_t off = (std::int64_t{b} * s.c + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
          const T v = static_cast<T>((x[off + i] - mean) * inv);
          xh[off + i] = v;
          y[off + i] = ga[c] * v + be[c];
        }
      }
    }
  });

  attach_grad(out, "batch_norm2d", {input, gamma, beta},
              [train, s, xhat, inv_std, gamma, input, beta](const Tensor& gout) {
                Tensor gin, gg, gb;
                if (input.requires_grad()) gin = Tensor::zeros(s, input.dtype());
                if (gamma.requires_grad()) gg = Tensor::zeros(gamma.shape(), gamma.dtype());
                if (beta.requires_grad()) gb = Tensor::zeros(beta.shape(), beta.dtype());
                dispatch(input.dtype(), [&](auto tag) {
                  using T = decltype(tag);
                  const T* dy = gout.data<T>();
                  const T* xh = xhat.data<T>();
                  const T* is = inv_std.data<T>();
                  const T* ga = gamma.data<T>();
                  const std::int64_t plane = s.plane();
                  const double m = static_cast<double>(std::int64_t{s.n} * plane);
                  for (int c = 0; c < s.c; ++c) {
                    double sum_dy = 0.0, sum_dy_xh = 0.0;
                    for (int b = 0; b < s.n; ++b) {
                      const std::int64_t off = (std::int64_t{b} * s.c + c) * plane;
                      for (std::int64_t i = 0; i < plane; ++i) {
                        sum_dy += dy[off + i];
                        sum_dy_xh += double(dy[off + i]) * xh[off + i];
                      }
                    }
                    if (gg.defined()) gg.data<T>()[c] = static_cast<T>(sum_dy_xh);
                    if (gb.defined()) gb.data<T>()[c] = static_cast<T>(sum_dy);
                    if (!gin.defined()) continue;
                    T* dx = gin.data<T>();
                    const double k = double(ga[c]) * is[c];
                    for (int b = 0; b < s.n; ++b) {
                      const std::int64_t off = (std::int64_t{b} * s.c + c) * plane;
                      for (std::int64_t i = 0; i < plane; ++i) {
                        if (train) {
                          dx[off + i] = static_cast<T>(
                              k * (dy[off + i] - sum_dy / m - xh[off + i] * sum_dy_xh / m));
                        } else {
                          dx[off + i] = static_cast<T>(k * dy[off + i]);
                        }
                      }
                    }
                  }
                });
                return std::vector<Tensor>{gin, gg, gb};
              });
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out = Tensor::zeros(input.shape(), input.dtype());
  dispatch(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* x = input.data<T>();
    T* y = out.data<T>();
    const std::int64_t n = input.numel();
    for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] < T(0) ? T(0) : x[i];  // NaN passes through
  });
  attach_grad(out, "relu", {input}, [input](const Tensor& gout) {
    Tensor gin = Tensor::zeros(input.shape(), input.dtype());
    dispatch(input.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const T* x = input.data<T>();
      const T* g = gout.data<T>();
      T* d = gin.data<T>();
      const std::int64_t n = input.numel();
      for (std::int64_t i = 0; i < n; ++i) d[i] = x[i] > T(0) ? g[i] : T(0);
    });
    return std::vector<Tensor>{gin};
  });
  return out;
}

Tensor upsample_nearest(const Tensor& input, int factor) {
  if (factor < 2) throw ShapeError("upsample_nearest", "factor", 2, factor);
  const Shape& s = input.shape();
  Shape os{s.n, s.c, s.h * factor, s.w * factor};
  Tensor out = Tensor::zeros(os, input.dtype());
  dispatch(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* x = input.data<T>();
    T* y = out.data<T>();
    for (std::int64_t pl = 0; pl < std::int64_t{s.n} * s.c; ++pl) {
      const T* src = x + pl * s.plane();
      T* dst = y + pl * os.plane();
      for (int oy = 0; oy < os.h; ++oy) {
        const T* srow = src + std::int64_t{oy / factor} * s.w;
        T* drow = dst + std::int64_t{oy} * os.w;
        for (int ox = 0; ox < os.w; ++ox) drow[ox] = srow[ox / factor];
      }
    }
  });
  attach_grad(out, "upsample_nearest", {input}, [s, os, factor, input](const Tensor& gout) {
    Tensor gin = Tensor::zeros(s, input.dtype());
    dispatch(input.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const T* g = gout.data<T>();
      T* d = gin.data<T>();
      for (std::int64_t pl = 0; pl < std::int64_t{s.n} * s.c; ++pl) {
        const T* src = g + pl * os.plane();
        T* dst = d + pl * s.plane();
        for (int oy = 0; oy < os.h; ++oy) {
          const T* srow = src + std::int64_t{oy} * os.w;
          T* drow = dst + std::int64_t{oy / factor} * s.w;
          for (int ox = 0; ox < os.w; ++ox) drow[ox / factor] += srow[ox];
        }
      }
    });
    return std::vector<Tensor>{gin};
  });
  return out;
}

Tensor avg_pool2d(const Tensor& input, int factor) {
  const Shape& s = input.shape();
  if (factor < 1) throw ShapeError("avg_pool2d", "factor", 1, factor);
  if (s.h % factor != 0) throw ShapeError("avg_pool2d", "height", (s.h / factor) * factor, s.h);
  if (s.w % factor != 0) throw ShapeError("avg_pool2d", "width", (s.w / factor) * factor, s.w);
  Shape os{s.n, s.c, s.h / factor, s.w / factor};
  Tensor out = Tensor::zeros(os, input.dtype());
  const double inv = 1.0 / (factor * factor);
  dispatch(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* x = input.data<T>();
    T* y = out.data<T>();
    // Pairwise summation per window keeps the mean of a constant window exact.
    std::vector<T> window(static_cast<std::size_t>(factor) * factor);
    for (std::int64_t pl = 0; pl < std::int64_t{s.n} * s.c; ++pl) {
      const T* src = x + pl * s.plane();
      T* dst = y + pl * os.plane();
      for (int oy = 0; oy < os.h; ++oy) {
        for (int ox = 0; ox < os.w; ++ox) {
          std::size_t i = 0;
          for (int dy = 0; dy < factor; ++dy) {
            for (int dx = 0; dx < factor; ++dx) {
              window[i++] = src[std::int64_t{oy * factor + dy} * s.w + ox * factor + dx];
            }
          }
          for (std::size_t len = window.size(); len > 1; len = (len + 1) / 2) {
            for (std::size_t j = 0; j < len / 2; ++j) window[j] = window[2 * j] + window[2 * j + 1];
            if (len % 2) window[len / 2] = window[len - 1];
          }
          dst[std::int64_t{oy} * os.w + ox] = static_cast<T>(window[0] * inv);
        }
      }
    }
  });
  attach_grad(out, "avg_pool2d", {input}, [s, os, factor, inv, input](const Tensor& gout) {
    Tensor gin = Tensor::zeros(s, input.dtype());
    dispatch(input.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const T* g = gout.data<T>();
      T* d = gin.data<T>();
      for (std::int64_t pl = 0; pl < std::int64_t{s.n} * s.c; ++pl) {
        const T* src = g + pl * os.plane();
        T* dst = d + pl * s.plane();
        for (int iy = 0; iy < s.h; ++iy) {
          for (int ix = 0; ix < s.w; ++ix) {
            dst[std::int64_t{iy} * s.w + ix] =
                static_cast<T>(src[(iy / factor) * os.w + ix / factor] * inv);
          }
        }
      }
    });
    return std::vector<Tensor>{gin};
  });
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same("add", a, b);
  Tensor out = a.clone();
  out.add_inplace(b);
  attach_grad(out, "add", {a, b}, [](const Tensor& gout) {
    return std::vector<Tensor>{gout, gout};
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same("mul", a, b);
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* x = a.data<T>();
    const T* y = b.data<T>();
    T* z = out.data<T>();
    for (std::int64_t i = 0; i < a.numel(); ++i) z[i] = x[i] * y[i];
  });
  attach_grad(out, "mul", {a, b}, [a, b](const Tensor& gout) {
    Tensor ga, gb;
    if (a.requires_grad()) ga = mul(gout.detach(), b.detach());
    if (b.requires_grad()) gb = mul(gout.detach(), a.detach());
    return std::vector<Tensor>{ga, gb};
  });
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  out.add_inplace(a, factor);
  attach_grad(out, "scale", {a}, [factor, a](const Tensor& gout) {
    Tensor g = Tensor::zeros(a.shape(), a.dtype());
    g.add_inplace(gout, factor);
    return std::vector<Tensor>{g};
  });
  return out;
}

Tensor sum(const Tensor& a) {
  Tensor out = Tensor::zeros({1, 1, 1, 1}, a.dtype());
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* x = a.data<T>();
    double acc = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) acc += x[i];
    out.data<T>()[0] = static_cast<T>(acc);
  });
  attach_grad(out, "sum", {a}, [a](const Tensor& gout) {
    return std::vector<Tensor>{Tensor::full(a.shape(), gout.item(), a.dtype())};
  });
  return out;
}

Tensor mse_loss(const Tensor& pred, const Tensor& target, const Tensor& weight) {
  require_same("mse_loss", pred, target);
  const Shape& s = pred.shape();
  if (weight.defined()) {
    const Shape& ws = weight.shape();
    if (ws.n != s.n) throw ShapeError("mse_loss", "weight.n", s.n, ws.n);
    if (ws.c != s.c) throw ShapeError("mse_loss", "weight.length", s.c, ws.c);
    if (ws.plane() != 1) throw ShapeError("mse_loss", "weight.plane", 1, ws.plane());
  }
  const double inv = 1.0 / static_cast<double>(s.numel());
  Tensor out = Tensor::zeros({1, 1, 1, 1}, pred.dtype());
  dispatch(pred.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* p = pred.data<T>();
    const T* t = target.data<T>();
    double acc = 0.0;
    for (std::int64_t pl = 0; pl < std::int64_t{s.n} * s.c; ++pl) {
      const double wk = weight.defined() ? weight.flat(pl) : 1.0;
      if (wk == 0.0) continue;
      double part = 0.0;
      for (std::int64_t i = pl * s.plane(); i < (pl + 1) * s.plane(); ++i) {
        const double d = double(p[i]) - double(t[i]);
        part += d * d;
      }
      acc += wk * part;
    }
    out.data<T>()[0] = static_cast<T>(acc * inv);
  });
  attach_grad(out, "mse_loss", {pred, target}, [s, inv, pred, target, weight](const Tensor& gout) {
    const double g = gout.item();
    Tensor gp = Tensor::zeros(s, pred.dtype());
    dispatch(pred.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const T* p = pred.data<T>();
      const T* t = target.data<T>();
      T* d = gp.data<T>();
      for (std::int64_t pl = 0; pl < std::int64_t{s.n} * s.c; ++pl) {
        const double wk = weight.defined() ? weight.flat(pl) : 1.0;
        const double k = 2.0 * wk * inv * g;
        for (std::int64_t i = pl * s.plane(); i < (pl + 1) * s.plane(); ++i) {
          d[i] = static_cast<T>(k * (double(p[i]) - double(t[i])));
        }
      }
    });
    Tensor gt;
    if (target.requires_grad()) gt = scale(gp, -1.0).detach();
    Tensor gpred = pred.requires_grad() ? gp : Tensor();
    return std::vector<Tensor>{gpred, gt};
  });
  return out;
}

Tensor flip_horizontal(const Tensor& input) {
  const Shape& s = input.shape();
  Tensor out = Tensor::zeros(s, input.dtype());
  dispatch(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* x = input.data<T>();
    T* y = out.data<T>();
    for (std::int64_t row = 0; row < std::int64_t{s.n} * s.c * s.h; ++row) {
      const T* src = x + row * s.w;
      T* dst = y + row * s.w;
      for (int i = 0; i < s.w; ++i) dst[i] = src[s.w - 1 - i];
    }
  });
  attach_grad(out, "flip_horizontal", {input}, [](const Tensor& gout) {
    NoGradGuard guard;
    return std::vector<Tensor>{flip_horizontal(gout)};
  });
  return out;
}

}  // namespace hrpose
