// Copyright (c) 2026 the stegostyle authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "stegostyle/tensor.hpp"

namespace stego::nn {

using NodePtr = std::shared_ptr<detail::Node>;

namespace detail {

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size())
    fail(std::string(op) + ": rank mismatch " + shape_str(sa) + " vs " + shape_str(sb));
  for (size_t i = 0; i < sa.size(); ++i)
    if (sa[i] != sb[i])
      fail(std::string(op) + ": axis " + std::to_string(i) + " mismatch " + shape_str(sa) +
           " vs " + shape_str(sb));
}

inline void check_rank(const Tensor& t, size_t rank, const char* op) {
  if (t.shape().size() != rank)
    fail(std::string(op) + ": expected rank " + std::to_string(rank) + " tensor, got " +
         shape_str(t.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise arithmetic

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<double> out(a.values());
  const auto& bv = b.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  bool rg = a.requires_grad() || b.requires_grad();
  NodePtr pa = a.node_ptr(), pb = b.node_ptr();
  return Tensor::make(a.shape(), std::move(out), rg, {a, b}, [pa, pb](detail::Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i];
    }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<double> out(a.values());
  const auto& bv = b.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  bool rg = a.requires_grad() || b.requires_grad();
  NodePtr pa = a.node_ptr(), pb = b.node_ptr();
  return Tensor::make(a.shape(), std::move(out), rg, {a, b}, [pa, pb](detail::Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
    }
  });
}

/// Elementwise (Hadamard) product; also the codec's message binding.
inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<double> out(a.values());
  const auto& bv = b.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  bool rg = a.requires_grad() || b.requires_grad();
  NodePtr pa = a.node_ptr(), pb = b.node_ptr();
  return Tensor::make(a.shape(), std::move(out), rg, {a, b}, [pa, pb](detail::Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * pb->val[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i] * pa->val[i];
    }
  });
}

inline Tensor add_scalar(const Tensor& a, double s) {
  std::vector<double> out(a.values());
  for (double& v : out) v += s;
  NodePtr pa = a.node_ptr();
  return Tensor::make(a.shape(), std::move(out), a.requires_grad(), {a}, [pa](detail::Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
  });
}

inline Tensor mul_scalar(const Tensor& a, double s) {
  std::vector<double> out(a.values());
  for (double& v : out) v *= s;
  NodePtr pa = a.node_ptr();
  return Tensor::make(a.shape(), std::move(out), a.requires_grad(), {a}, [pa, s](detail::Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * s;
  });
}

// ---------------------------------------------------------------------------
// activations

inline Tensor relu(const Tensor& a) {
  std::vector<double> out(a.values());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  NodePtr pa = a.node_ptr();
  return Tensor::make(a.shape(), std::move(out), a.requires_grad(), {a}, [pa](detail::Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    // subgradient at 0 taken as 0
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (pa->val[i] > 0.0) pa->grad[i] += self.grad[i];
  });
}

inline Tensor leaky_relu(const Tensor& a, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) fail("leaky_relu: slope must be in (0,1)");
  std::vector<double> out(a.values());
  for (double& v : out) v = v > 0.0 ? v : slope * v;
  NodePtr pa = a.node_ptr();
  return Tensor::make(a.shape(), std::move(out), a.requires_grad(), {a},
                      [pa, slope](detail::Node& self) {
                        if (!pa->requires_grad) return;
                        pa->ensure_grad();
                        for (size_t i = 0; i < self.grad.size(); ++i)
                          pa->grad[i] += self.grad[i] * (pa->val[i] > 0.0 ? 1.0 : slope);
                      });
}

inline double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.values());
  for (double& v : out) v = sigmoid_scalar(v);
  NodePtr pa = a.node_ptr();
  auto yv = std::make_shared<std::vector<double>>(out);
  return Tensor::make(a.shape(), std::move(out), a.requires_grad(), {a}, [pa, yv](detail::Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double y = (*yv)[i];
      pa->grad[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

inline Tensor tanh_op(const Tensor& a) {
  std::vector<double> out(a.values());
  for (double& v : out) v = std::tanh(v);
  NodePtr pa = a.node_ptr();
  auto yv = std::make_shared<std::vector<double>>(out);
  return Tensor::make(a.shape(), std::move(out), a.requires_grad(), {a}, [pa, yv](detail::Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double y = (*yv)[i];
      pa->grad[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

/// log(1 + exp(x)), computed without overflow. Basis of the stable GAN
/// losses: -log(sigmoid(x)) == softplus(-x).
inline Tensor softplus(const Tensor& a) {
  std::vector<double> out(a.values());
  for (double& v : out) v = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  NodePtr pa = a.node_ptr();
  return Tensor::make(a.shape(), std::move(out), a.requires_grad(), {a}, [pa](detail::Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      pa->grad[i] += self.grad[i] * sigmoid_scalar(pa->val[i]);
  });
}

// ---------------------------------------------------------------------------
// reductions

inline Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  NodePtr pa = a.node_ptr();
  return Tensor::make({1}, {s}, a.requires_grad(), {a}, [pa](detail::Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    const double g = self.grad[0];
    for (double& gv : pa->grad) gv += g;
  });
}

inline Tensor mean(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.size());
  double s = 0.0;
  for (double v : a.values()) s += v;
  NodePtr pa = a.node_ptr();
  return Tensor::make({1}, {s * inv}, a.requires_grad(), {a}, [pa, inv](detail::Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    const double g = self.grad[0] * inv;
    for (double& gv : pa->grad) gv += g;
  });
}

/// Mean squared difference between two same-shape tensors.
inline Tensor mse(const Tensor& a, const Tensor& b) {
  Tensor d = sub(a, b);
  return mean(mul(d, d));
}

// ---------------------------------------------------------------------------
// convolution

enum class Pad {
  Zero,   // out-of-range taps read 0
  Clamp,  // out-of-range taps read the nearest edge pixel
};

/// 2D cross-correlation. x is H×W×Cin, kernels are k×k×Cin×Cout with k odd;
/// stride 1 or 2, symmetric padding `pad`. Output spatial dims are
/// floor((H + 2*pad - k)/stride) + 1.
inline Tensor conv2d(const Tensor& x, const Tensor& kernels, int stride, int pad,
                     Pad mode = Pad::Zero) {
  detail::check_rank(x, 3, "conv2d input");
  detail::check_rank(kernels, 4, "conv2d kernels");
  const Shape& xs = x.shape();
  const Shape& ks = kernels.shape();
  const int H = xs[0], W = xs[1], Cin = xs[2];
  const int K = ks[0], Cout = ks[3];
  if (ks[1] != K)
    fail("conv2d: kernel axis 1 (" + std::to_string(ks[1]) + ") != axis 0 (" + std::to_string(K) + "), kernels must be square");
  if (K % 2 == 0) fail("conv2d: kernel size must be odd, got " + std::to_string(K));
  if (ks[2] != Cin)
    fail("conv2d: input channel axis 2 of x (" + std::to_string(Cin) +
         ") != kernel input-channel axis 2 (" + std::to_string(ks[2]) + ")");
  if (stride != 1 && stride != 2) fail("conv2d: stride must be 1 or 2, got " + std::to_string(stride));
  if (pad < 0) fail("conv2d: pad must be non-negative");
  const int OH = (H + 2 * pad - K) / stride + 1;
  const int OW = (W + 2 * pad - K) / stride + 1;
  if (OH <= 0 || OW <= 0)
    fail("conv2d: output spatial dims would be empty for input " + shape_str(xs) + " with k=" +
         std::to_string(K) + " pad=" + std::to_string(pad));

  const std::vector<double>& xv = x.values();
  const std::vector<double>& kv = kernels.values();
  std::vector<double> out(static_cast<size_t>(OH) * OW * Cout, 0.0);

  const bool clamp = (mode == Pad::Clamp);
  auto forward_rows = [&xv, &kv, &out, H, W, Cin, K, Cout, OW, stride, pad, clamp](int oy0,
                                                                                   int oy1) {
    for (int oy = oy0; oy < oy1; ++oy) {
      for (int ox = 0; ox < OW; ++ox) {
        double* op = &out[(static_cast<size_t>(oy) * OW + ox) * Cout];
        for (int ky = 0; ky < K; ++ky) {
          int iy = oy * stride + ky - pad;
          if (clamp) iy = std::min(std::max(iy, 0), H - 1);
          else if (iy < 0 || iy >= H) continue;
          for (int kx = 0; kx < K; ++kx) {
            int ix = ox * stride + kx - pad;
            if (clamp) ix = std::min(std::max(ix, 0), W - 1);
            else if (ix < 0 || ix >= W) continue;
            const double* xp = &xv[(static_cast<size_t>(iy) * W + ix) * Cin];
            const double* kp = &kv[(static_cast<size_t>(ky) * K + kx) * Cin * Cout];
            for (int ci = 0; ci < Cin; ++ci) {
              const double xvv = xp[ci];
              const double* kr = kp + static_cast<size_t>(ci) * Cout;
              for (int co = 0; co < Cout; ++co) op[co] += xvv * kr[co];
            }
          }
        }
      }
    }
  };
  // two threads over disjoint output rows; arithmetic identical either way
  if (static_cast<long>(OH) * OW * Cin * Cout >= 1 << 14 && OH >= 4) {
    const int mid = OH / 2;
    run_pair([&] { forward_rows(0, mid); }, [&] { forward_rows(mid, OH); });
  } else {
    forward_rows(0, OH);
  }

  bool rg = x.requires_grad() || kernels.requires_grad();
  NodePtr px = x.node_ptr(), pk = kernels.node_ptr();
  return Tensor::make(
      {OH, OW, Cout}, std::move(out), rg, {x, kernels},
      [px, pk, H, W, Cin, K, Cout, OH, OW, stride, pad, clamp](detail::Node& self) {
        const bool need_gx = px->requires_grad;
        const bool need_gk = pk->requires_grad;
        if (need_gx) px->ensure_grad();
        if (need_gk) pk->ensure_grad();
        const std::vector<double>& gy = self.grad;
        const std::vector<double>& xv = px->val;
        const std::vector<double>& kv = pk->val;
        auto kernel_grad_pass = [&] {
          for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
              const double* gp = &gy[(static_cast<size_t>(oy) * OW + ox) * Cout];
              for (int ky = 0; ky < K; ++ky) {
                int iy = oy * stride + ky - pad;
                if (clamp) iy = std::min(std::max(iy, 0), H - 1);
                else if (iy < 0 || iy >= H) continue;
                for (int kx = 0; kx < K; ++kx) {
                  int ix = ox * stride + kx - pad;
                  if (clamp) ix = std::min(std::max(ix, 0), W - 1);
                  else if (ix < 0 || ix >= W) continue;
                  const size_t xoff = (static_cast<size_t>(iy) * W + ix) * Cin;
                  const size_t koff = (static_cast<size_t>(ky) * K + kx) * Cin * Cout;
                  for (int ci = 0; ci < Cin; ++ci) {
                    const double xvv = xv[xoff + ci];
                    double* gkr = &pk->grad[koff + static_cast<size_t>(ci) * Cout];
                    for (int co = 0; co < Cout; ++co) gkr[co] += xvv * gp[co];
                  }
                }
              }
            }
        };
        auto input_grad_pass = [&] {
          for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
              const double* gp = &gy[(static_cast<size_t>(oy) * OW + ox) * Cout];
              for (int ky = 0; ky < K; ++ky) {
                int iy = oy * stride + ky - pad;
                if (clamp) iy = std::min(std::max(iy, 0), H - 1);
                else if (iy < 0 || iy >= H) continue;
                for (int kx = 0; kx < K; ++kx) {
                  int ix = ox * stride + kx - pad;
                  if (clamp) ix = std::min(std::max(ix, 0), W - 1);
                  else if (ix < 0 || ix >= W) continue;
                  const size_t xoff = (static_cast<size_t>(iy) * W + ix) * Cin;
                  const size_t koff = (static_cast<size_t>(ky) * K + kx) * Cin * Cout;
                  for (int ci = 0; ci < Cin; ++ci) {
                    const double* kr = &kv[koff + static_cast<size_t>(ci) * Cout];
                    // four independent accumulators so the reduction
                    // pipelines/vectorizes; summation order is fixed
                    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
                    int co = 0;
                    for (; co + 4 <= Cout; co += 4) {
                      a0 += kr[co] * gp[co];
                      a1 += kr[co + 1] * gp[co + 1];
                      a2 += kr[co + 2] * gp[co + 2];
                      a3 += kr[co + 3] * gp[co + 3];
                    }
                    double acc = (a0 + a1) + (a2 + a3);
                    for (; co < Cout; ++co) acc += kr[co] * gp[co];
                    px->grad[xoff + ci] += acc;
                  }
                }
              }
            }
        };
        // the two passes touch disjoint buffers, so they pair up cleanly
        if (need_gx && need_gk)
          run_pair(kernel_grad_pass, input_grad_pass);
        else if (need_gk)
          kernel_grad_pass();
        else if (need_gx)
          input_grad_pass();
      });
}

/// Adds a per-channel bias to an H×W×C map.
inline Tensor bias_add(const Tensor& x, const Tensor& bias) {
  detail::check_rank(x, 3, "bias_add input");
  detail::check_rank(bias, 1, "bias_add bias");
  const int C = x.shape()[2];
  if (bias.shape()[0] != C)
    fail("bias_add: channel axis mismatch, map has " + std::to_string(C) + " channels, bias has " +
         std::to_string(bias.shape()[0]));
  std::vector<double> out(x.values());
  const auto& bv = bias.values();
  const size_t n = out.size();
  for (size_t i = 0; i < n; ++i) out[i] += bv[i % C];
  bool rg = x.requires_grad() || bias.requires_grad();
  NodePtr px = x.node_ptr(), pb = bias.node_ptr();
  return Tensor::make(x.shape(), std::move(out), rg, {x, bias}, [px, pb, C](detail::Node& self) {
    if (px->requires_grad) {
      px->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i % C] += self.grad[i];
    }
  });
}

// ---------------------------------------------------------------------------
// normalization, resampling, pooling

/// Per-channel normalization over the spatial extent of an H×W×C map,
/// with learnable scale and shift.
inline Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                            double eps = 1e-5) {
  detail::check_rank(x, 3, "instance_norm input");
  const int H = x.shape()[0], W = x.shape()[1], C = x.shape()[2];
  if (gamma.shape() != Shape{C} || beta.shape() != Shape{C})
    fail("instance_norm: scale/shift must have shape (" + std::to_string(C) + ")");
  const int N = H * W;
  const std::vector<double>& xv = x.values();
  const std::vector<double>& gv = gamma.values();
  const std::vector<double>& bv = beta.values();

  std::vector<double> mu(C, 0.0), inv_s(C, 0.0);
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < C; ++c) mu[c] += xv[static_cast<size_t>(i) * C + c];
  for (int c = 0; c < C; ++c) mu[c] /= N;
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < C; ++c) {
      const double d = xv[static_cast<size_t>(i) * C + c] - mu[c];
      inv_s[c] += d * d;
    }
  for (int c = 0; c < C; ++c) inv_s[c] = 1.0 / std::sqrt(inv_s[c] / N + eps);

  auto xhat = std::make_shared<std::vector<double>>(static_cast<size_t>(N) * C);
  std::vector<double> out(static_cast<size_t>(N) * C);
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < C; ++c) {
      const size_t idx = static_cast<size_t>(i) * C + c;
      const double xh = (xv[idx] - mu[c]) * inv_s[c];
      (*xhat)[idx] = xh;
      out[idx] = gv[c] * xh + bv[c];
    }

  bool rg = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  NodePtr px = x.node_ptr(), pg = gamma.node_ptr(), pb = beta.node_ptr();
  auto invs = std::make_shared<std::vector<double>>(std::move(inv_s));
  return Tensor::make(
      x.shape(), std::move(out), rg, {x, gamma, beta},
      [px, pg, pb, xhat, invs, N, C](detail::Node& self) {
        const std::vector<double>& gy = self.grad;
        if (pg->requires_grad) {
          pg->ensure_grad();
          for (int i = 0; i < N; ++i)
            for (int c = 0; c < C; ++c) {
              const size_t idx = static_cast<size_t>(i) * C + c;
              pg->grad[c] += gy[idx] * (*xhat)[idx];
            }
        }
        if (pb->requires_grad) {
          pb->ensure_grad();
          for (int i = 0; i < N; ++i)
            for (int c = 0; c < C; ++c) pb->grad[c] += gy[static_cast<size_t>(i) * C + c];
        }
        if (px->requires_grad) {
          px->ensure_grad();
          std::vector<double> mg(C, 0.0), mgx(C, 0.0);
          for (int i = 0; i < N; ++i)
            for (int c = 0; c < C; ++c) {
              const size_t idx = static_cast<size_t>(i) * C + c;
              mg[c] += gy[idx];
              mgx[c] += gy[idx] * (*xhat)[idx];
            }
          for (int c = 0; c < C; ++c) {
            mg[c] /= N;
            mgx[c] /= N;
          }
          const std::vector<double>& gv = pg->val;
          for (int i = 0; i < N; ++i)
            for (int c = 0; c < C; ++c) {
              const size_t idx = static_cast<size_t>(i) * C + c;
              px->grad[idx] +=
                  gv[c] * (*invs)[c] * (gy[idx] - mg[c] - (*xhat)[idx] * mgx[c]);
            }
        }
      });
}

/// Nearest-neighbor upsampling by a factor of 2 in both spatial dims.
inline Tensor resize_nearest_2x(const Tensor& x) {
  detail::check_rank(x, 3, "resize_nearest_2x input");
  const int H = x.shape()[0], W = x.shape()[1], C = x.shape()[2];
  const std::vector<double>& xv = x.values();
  std::vector<double> out(static_cast<size_t>(2 * H) * (2 * W) * C);
  for (int y = 0; y < 2 * H; ++y) {
    const int sy = y / 2;
    for (int xcol = 0; xcol < 2 * W; ++xcol) {
      const int sx = xcol / 2;
      const double* src = &xv[(static_cast<size_t>(sy) * W + sx) * C];
      double* dst = &out[(static_cast<size_t>(y) * 2 * W + xcol) * C];
      for (int c = 0; c < C; ++c) dst[c] = src[c];
    }
  }
  NodePtr px = x.node_ptr();
  return Tensor::make({2 * H, 2 * W, C}, std::move(out), x.requires_grad(), {x},
                      [px, H, W, C](detail::Node& self) {
                        if (!px->requires_grad) return;
                        px->ensure_grad();
                        for (int y = 0; y < 2 * H; ++y) {
                          const int sy = y / 2;
                          for (int xcol = 0; xcol < 2 * W; ++xcol) {
                            const int sx = xcol / 2;
                            const double* g = &self.grad[(static_cast<size_t>(y) * 2 * W + xcol) * C];
                            double* dst = &px->grad[(static_cast<size_t>(sy) * W + sx) * C];
                            for (int c = 0; c < C; ++c) dst[c] += g[c];
                          }
                        }
                      });
}

/// 2×2 average pooling with stride 2. Requires even spatial dims.
inline Tensor avg_pool_2x2(const Tensor& x) {
  detail::check_rank(x, 3, "avg_pool_2x2 input");
  const int H = x.shape()[0], W = x.shape()[1], C = x.shape()[2];
  if (H % 2 != 0 || W % 2 != 0)
    fail("avg_pool_2x2: spatial dims must be even, got " + shape_str(x.shape()));
  const int OH = H / 2, OW = W / 2;
  const std::vector<double>& xv = x.values();
  std::vector<double> out(static_cast<size_t>(OH) * OW * C, 0.0);
  for (int oy = 0; oy < OH; ++oy)
    for (int ox = 0; ox < OW; ++ox) {
      double* op = &out[(static_cast<size_t>(oy) * OW + ox) * C];
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const double* ip = &xv[(static_cast<size_t>(2 * oy + dy) * W + (2 * ox + dx)) * C];
          for (int c = 0; c < C; ++c) op[c] += 0.25 * ip[c];
        }
    }
  NodePtr px = x.node_ptr();
  return Tensor::make({OH, OW, C}, std::move(out), x.requires_grad(), {x},
                      [px, W, C, OH, OW](detail::Node& self) {
                        if (!px->requires_grad) return;
                        px->ensure_grad();
                        for (int oy = 0; oy < OH; ++oy)
                          for (int ox = 0; ox < OW; ++ox) {
                            const double* g = &self.grad[(static_cast<size_t>(oy) * OW + ox) * C];
                            for (int dy = 0; dy < 2; ++dy)
                              for (int dx = 0; dx < 2; ++dx) {
                                double* ip =
                                    &px->grad[(static_cast<size_t>(2 * oy + dy) * W + (2 * ox + dx)) * C];
                                for (int c = 0; c < C; ++c) ip[c] += 0.25 * g[c];
                              }
                          }
                      });
}

/// Global average pooling: H×W×C → C.
inline Tensor global_avg_pool(const Tensor& x) {
  detail::check_rank(x, 3, "global_avg_pool input");
  const int H = x.shape()[0], W = x.shape()[1], C = x.shape()[2];
  const int N = H * W;
  const std::vector<double>& xv = x.values();
  std::vector<double> out(C, 0.0);
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < C; ++c) out[c] += xv[static_cast<size_t>(i) * C + c];
  for (int c = 0; c < C; ++c) out[c] /= N;
  NodePtr px = x.node_ptr();
  return Tensor::make({C}, std::move(out), x.requires_grad(), {x},
                      [px, N, C](detail::Node& self) {
                        if (!px->requires_grad) return;
                        px->ensure_grad();
                        for (int i = 0; i < N; ++i)
                          for (int c = 0; c < C; ++c)
                            px->grad[static_cast<size_t>(i) * C + c] += self.grad[c] / N;
                      });
}

// ---------------------------------------------------------------------------
// shape plumbing

/// Concatenates two H×W×C maps along the channel axis.
inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
  detail::check_rank(a, 3, "concat_channels");
  detail::check_rank(b, 3, "concat_channels");
  const int H = a.shape()[0], W = a.shape()[1], Ca = a.shape()[2], Cb = b.shape()[2];
  if (b.shape()[0] != H || b.shape()[1] != W)
    fail("concat_channels: spatial dims differ, " + shape_str(a.shape()) + " vs " +
         shape_str(b.shape()));
  const int C = Ca + Cb;
  const std::vector<double>& av = a.values();
  const std::vector<double>& bv = b.values();
  std::vector<double> out(static_cast<size_t>(H) * W * C);
  for (int i = 0; i < H * W; ++i) {
    for (int c = 0; c < Ca; ++c) out[static_cast<size_t>(i) * C + c] = av[static_cast<size_t>(i) * Ca + c];
    for (int c = 0; c < Cb; ++c)
      out[static_cast<size_t>(i) * C + Ca + c] = bv[static_cast<size_t>(i) * Cb + c];
  }
  bool rg = a.requires_grad() || b.requires_grad();
  NodePtr pa = a.node_ptr(), pb = b.node_ptr();
  return Tensor::make({H, W, C}, std::move(out), rg, {a, b},
                      [pa, pb, H, W, Ca, Cb, C](detail::Node& self) {
                        if (pa->requires_grad) {
                          pa->ensure_grad();
                          for (int i = 0; i < H * W; ++i)
                            for (int c = 0; c < Ca; ++c)
                              pa->grad[static_cast<size_t>(i) * Ca + c] +=
                                  self.grad[static_cast<size_t>(i) * C + c];
                        }
                        if (pb->requires_grad) {
                          pb->ensure_grad();
                          for (int i = 0; i < H * W; ++i)
                            for (int c = 0; c < Cb; ++c)
                              pb->grad[static_cast<size_t>(i) * Cb + c] +=
                                  self.grad[static_cast<size_t>(i) * C + Ca + c];
                        }
                      });
}

/// Dense matrix (R×C) times vector (C) → vector (R).
inline Tensor matvec(const Tensor& w, const Tensor& v) {
  detail::check_rank(w, 2, "matvec weight");
  detail::check_rank(v, 1, "matvec vector");
  const int R = w.shape()[0], C = w.shape()[1];
  if (v.shape()[0] != C)
    fail("matvec: weight columns (" + std::to_string(C) + ") != vector length (" +
         std::to_string(v.shape()[0]) + ")");
  const std::vector<double>& wv = w.values();
  const std::vector<double>& vv = v.values();
  std::vector<double> out(R, 0.0);
  for (int r = 0; r < R; ++r) {
    const double* row = &wv[static_cast<size_t>(r) * C];
    double acc = 0.0;
    for (int c = 0; c < C; ++c) acc += row[c] * vv[c];
    out[r] = acc;
  }
  bool rg = w.requires_grad() || v.requires_grad();
  NodePtr pw = w.node_ptr(), pv = v.node_ptr();
  return Tensor::make({R}, std::move(out), rg, {w, v}, [pw, pv, R, C](detail::Node& self) {
    if (pw->requires_grad) {
      pw->ensure_grad();
      for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c)
          pw->grad[static_cast<size_t>(r) * C + c] += self.grad[r] * pv->val[c];
    }
    if (pv->requires_grad) {
      pv->ensure_grad();
      for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c)
          pv->grad[c] += self.grad[r] * pw->val[static_cast<size_t>(r) * C + c];
    }
  });
}

/// Multiplies every channel of an H×W×C map by its per-channel gate.
inline Tensor scale_channels(const Tensor& x, const Tensor& gates) {
  detail::check_rank(x, 3, "scale_channels input");
  detail::check_rank(gates, 1, "scale_channels gates");
  const int C = x.shape()[2];
  if (gates.shape()[0] != C)
    fail("scale_channels: gate length (" + std::to_string(gates.shape()[0]) +
         ") != channel axis (" + std::to_string(C) + ")");
  const int N = x.shape()[0] * x.shape()[1];
  const std::vector<double>& xv = x.values();
  const std::vector<double>& gv = gates.values();
  std::vector<double> out(xv.size());
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < C; ++c)
      out[static_cast<size_t>(i) * C + c] = xv[static_cast<size_t>(i) * C + c] * gv[c];
  bool rg = x.requires_grad() || gates.requires_grad();
  NodePtr px = x.node_ptr(), pg = gates.node_ptr();
  return Tensor::make(x.shape(), std::move(out), rg, {x, gates},
                      [px, pg, N, C](detail::Node& self) {
                        if (px->requires_grad) {
                          px->ensure_grad();
                          for (int i = 0; i < N; ++i)
                            for (int c = 0; c < C; ++c) {
                              const size_t idx = static_cast<size_t>(i) * C + c;
                              px->grad[idx] += self.grad[idx] * pg->val[c];
                            }
                        }
                        if (pg->requires_grad) {
                          pg->ensure_grad();
                          for (int i = 0; i < N; ++i)
                            for (int c = 0; c < C; ++c) {
                              const size_t idx = static_cast<size_t>(i) * C + c;
                              pg->grad[c] += self.grad[idx] * px->val[idx];
                            }
                        }
                      });
}

/// Collects the flat-index cells listed in `idx` into a vector of length n.
inline Tensor gather(const Tensor& x, std::vector<int> idx) {
  const int total = x.size();
  for (int i : idx)
    if (i < 0 || i >= total)
      fail("gather: index " + std::to_string(i) + " out of range for " + std::to_string(total) +
           " cells");
  const std::vector<double>& xv = x.values();
  std::vector<double> out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) out[i] = xv[static_cast<size_t>(idx[i])];
  NodePtr px = x.node_ptr();
  auto ix = std::make_shared<std::vector<int>>(std::move(idx));
  return Tensor::make({static_cast<int>(ix->size())}, std::move(out), x.requires_grad(), {x},
                      [px, ix](detail::Node& self) {
                        if (!px->requires_grad) return;
                        px->ensure_grad();
                        for (size_t i = 0; i < ix->size(); ++i)
                          px->grad[static_cast<size_t>((*ix)[i])] += self.grad[i];
                      });
}

}  // namespace stego::nn
