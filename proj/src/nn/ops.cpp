#include "featprobe/nn/ops.hpp"

#include <algorithm>
#include <cmath>

namespace featprobe::nn {

namespace {

[[noreturn]] void shape_error(const std::string& op, const std::string& what) {
  throw Error(ErrorCode::kShapeMismatch, op + ": " + what);
}

template <typename T>
bool needs(const Var<T>& v) {
  return v && v->requires_grad;
}

template <typename T>
void require_rank(const std::string& op, const Var<T>& x, std::size_t rank) {
  if (x->value.rank() != rank) {
    shape_error(op, "expected rank " + std::to_string(rank) + ", got " +
                        shape_to_string(x->value.shape()));
  }
}

}  // namespace

template <typename T>
Var<T> dense(Tape<T>& tape, const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const auto& xs = x->value.shape();
  const auto& ws = weight->value.shape();
  if (ws.size() != 2 || xs.empty() || xs.back() != ws[1]) {
    shape_error("dense", "input " + shape_to_string(xs) + " incompatible with weight " +
                             shape_to_string(ws));
  }
  const std::size_t in = ws[1], out = ws[0];
  if (bias && bias->value.shape() != Shape{out}) shape_error("dense", "bias must be [out]");
  const std::size_t rows = x->value.size() / in;
  Shape ys = xs;
  ys.back() = out;
  BasicTensor<T> y(ys);
  const T* X = x->value.data().data();
  const T* W = weight->value.data().data();
  T* Y = y.data().data();
  for (std::size_t n = 0; n < rows; ++n) {
    const T* xr = X + n * in;
    for (std::size_t o = 0; o < out; ++o) {
      const T* wr = W + o * in;
      T acc = bias ? bias->value[o] : T{0};
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
      Y[n * out + o] = acc;
    }
  }
  bool rg = needs(x) || needs(weight) || needs(bias);
  return tape.record(std::move(y), rg, [x, weight, bias, rows, in, out](const BasicTensor<T>& g) {
    const T* G = g.data().data();
    const T* X = x->value.data().data();
    const T* W = weight->value.data().data();
    if (needs(x)) {
      T* dX = x->grad_buffer().data().data();
      for (std::size_t n = 0; n < rows; ++n) {
        for (std::size_t o = 0; o < out; ++o) {
          T go = G[n * out + o];
          if (go == T{0}) continue;
          const T* wr = W + o * in;
          T* dx = dX + n * in;
          for (std::size_t i = 0; i < in; ++i) dx[i] += go * wr[i];
        }
      }
    }
    if (needs(weight)) {
      T* dW = weight->grad_buffer().data().data();
      for (std::size_t n = 0; n < rows; ++n) {
        const T* xr = X + n * in;
        for (std::size_t o = 0; o < out; ++o) {
          T go = G[n * out + o];
          if (go == T{0}) continue;
          T* dw = dW + o * in;
          for (std::size_t i = 0; i < in; ++i) dw[i] += go * xr[i];
        }
      }
    }
    if (needs(bias)) {
      auto& dB = bias->grad_buffer();
      for (std::size_t n = 0; n < rows; ++n) {
        for (std::size_t o = 0; o < out; ++o) dB[o] += G[n * out + o];
      }
    }
  });
}

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x) {
  BasicTensor<T> y = x->value;
  for (auto& v : y.data()) v = v > T{0} ? v : T{0};
  return tape.record(std::move(y), needs(x), [x](const BasicTensor<T>& g) {
    auto& dx = x->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x->value[i] > T{0}) dx[i] += g[i];
    }
  });
}

namespace {

template <typename T>
Var<T> apply_mask(Tape<T>& tape, const Var<T>& x, BasicTensor<T> mask) {
  BasicTensor<T> y = x->value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
  return tape.record(std::move(y), needs(x), [x, mask = std::move(mask)](const BasicTensor<T>& g) {
    auto& dx = x->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * mask[i];
  });
}

}  // namespace

template <typename T>
Var<T> dropout(Tape<T>& tape, const Var<T>& x, double p) {
  if (!tape.training() || p <= 0.0) return x;
  if (p >= 1.0) throw Error(ErrorCode::kInvalidParameter, "dropout probability must be < 1");
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  BasicTensor<T> mask(x->value.shape());
  for (auto& m : mask.data()) m = tape.rng().uniform() < p ? T{0} : scale;
  return apply_mask(tape, x, std::move(mask));
}

template <typename T>
Var<T> dropout2d(Tape<T>& tape, const Var<T>& x, double p) {
  require_rank("dropout2d", x, 4);
  if (!tape.training() || p <= 0.0) return x;
  if (p >= 1.0) throw Error(ErrorCode::kInvalidParameter, "dropout probability must be < 1");
  const auto& s = x->value.shape();
  const std::size_t plane = s[2] * s[3];
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  BasicTensor<T> mask(s);
  for (std::size_t bc = 0; bc < s[0] * s[1]; ++bc) {
    T m = tape.rng().uniform() < p ? T{0} : scale;
    std::fill_n(mask.data().begin() + static_cast<std::ptrdiff_t>(bc * plane), plane, m);
  }
  return apply_mask(tape, x, std::move(mask));
}

template <typename T>
Var<T> conv3x3(Tape<T>& tape, const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  require_rank("conv3x3", x, 4);
  const auto& xs = x->value.shape();
  const auto& ws = weight->value.shape();
  if (ws.size() != 4 || ws[1] != xs[1] || ws[2] != 3 || ws[3] != 3) {
    shape_error("conv3x3", "weight " + shape_to_string(ws) + " incompatible with input " +
                               shape_to_string(xs));
  }
  const std::size_t B = xs[0], Cin = xs[1], H = xs[2], W = xs[3], Cout = ws[0];
  if (bias && bias->value.shape() != Shape{Cout}) shape_error("conv3x3", "bias must be [Cout]");
  BasicTensor<T> y(Shape{B, Cout, H, W});
  const T* X = x->value.data().data();
  const T* K = weight->value.data().data();
  T* Y = y.data().data();
  const long h_max = static_cast<long>(H), w_max = static_cast<long>(W);

  // out[b,o,h,w] += k[o,i,ky,kx] * in[b,i,h+ky-1,w+kx-1]
  auto for_each_tap = [&](auto&& body) {
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t o = 0; o < Cout; ++o) {
        for (std::size_t i = 0; i < Cin; ++i) {
          for (long ky = 0; ky < 3; ++ky) {
            for (long kx = 0; kx < 3; ++kx) {
              const std::size_t k_idx = ((o * Cin + i) * 3 + ky) * 3 + kx;
              const long dy = ky - 1, dx = kx - 1;
              const long h0 = std::max(0L, -dy), h1 = std::min(h_max, h_max - dy);
              const long w0 = std::max(0L, -dx), w1 = std::min(w_max, w_max - dx);
              const std::size_t in_plane = (b * Cin + i) * H * W;
              const std::size_t out_plane = (b * Cout + o) * H * W;
              body(k_idx, in_plane, out_plane, dy, dx, h0, h1, w0, w1);
            }
          }
        }
      }
    }
  };

  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < Cout; ++o) {
      T bv = bias ? bias->value[o] : T{0};
      std::fill_n(Y + (b * Cout + o) * H * W, H * W, bv);
    }
  }
  for_each_tap([&](std::size_t k_idx, std::size_t in_plane, std::size_t out_plane, long dy, long dx,
                   long h0, long h1, long w0, long w1) {
    const T k = K[k_idx];
    for (long h = h0; h < h1; ++h) {
      const T* xr = X + in_plane + static_cast<std::size_t>((h + dy) * w_max + dx);
      T* yr = Y + out_plane + static_cast<std::size_t>(h * w_max);
      for (long w = w0; w < w1; ++w) yr[w] += k * xr[w];
    }
  });

  bool rg = needs(x) || needs(weight) || needs(bias);
  return tape.record(std::move(y), rg, [=](const BasicTensor<T>& g) {
    const T* G = g.data().data();
    const T* X = x->value.data().data();
    const T* K = weight->value.data().data();
    T* dX = needs(x) ? x->grad_buffer().data().data() : nullptr;
    T* dK = needs(weight) ? weight->grad_buffer().data().data() : nullptr;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t o = 0; o < Cout; ++o) {
        for (std::size_t i = 0; i < Cin; ++i) {
          for (long ky = 0; ky < 3; ++ky) {
            for (long kx = 0; kx < 3; ++kx) {
              const std::size_t k_idx = ((o * Cin + i) * 3 + ky) * 3 + kx;
              const long dy = ky - 1, dx = kx - 1;
              const long h0 = std::max(0L, -dy), h1 = std::min(h_max, h_max - dy);
              const long w0 = std::max(0L, -dx), w1 = std::min(w_max, w_max - dx);
              const std::size_t in_plane = (b * Cin + i) * H * W;
              const std::size_t out_plane = (b * Cout + o) * H * W;
              const T k = K[k_idx];
              T dk = T{0};
              for (long h = h0; h < h1; ++h) {
                const std::size_t in_off = in_plane + static_cast<std::size_t>((h + dy) * w_max + dx);
                const T* gr = G + out_plane + static_cast<std::size_t>(h * w_max);
                const T* xr = X + in_off;
                for (long w = w0; w < w1; ++w) {
                  dk += gr[w] * xr[w];
                  if (dX) dX[in_off + static_cast<std::size_t>(w)] += k * gr[w];
                }
              }
              if (dK) dK[k_idx] += dk;
            }
          }
        }
      }
    }
    if (needs(bias)) {
      auto& dB = bias->grad_buffer();
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t o = 0; o < Cout; ++o) {
          const T* gp = G + (b * Cout + o) * H * W;
          T acc = T{0};
          for (std::size_t p = 0; p < H * W; ++p) acc += gp[p];
          dB[o] += acc;
        }
      }
    }
  });
}

template <typename T>
Var<T> batchnorm2d(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                   BatchNormState<T>& state) {
  require_rank("batchnorm2d", x, 4);
  const auto& s = x->value.shape();
  const std::size_t B = s[0], C = s[1], P = s[2] * s[3];
  if (gamma->value.shape() != Shape{C} || beta->value.shape() != Shape{C} ||
      state.running_mean.shape() != Shape{C}) {
    shape_error("batchnorm2d", "parameters must be [C]");
  }
  const std::size_t N = B * P;
  BasicTensor<T> mean(Shape{C}), inv_std(Shape{C});
  if (tape.training()) {
    for (std::size_t c = 0; c < C; ++c) {
      double sum = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const T* xp = x->value.data().data() + (b * C + c) * P;
        for (std::size_t p = 0; p < P; ++p) sum += xp[p];
      }
      double mu = sum / static_cast<double>(N);
      double sq = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const T* xp = x->value.data().data() + (b * C + c) * P;
        for (std::size_t p = 0; p < P; ++p) sq += (xp[p] - mu) * (xp[p] - mu);
      }
      double var = sq / static_cast<double>(N);
      mean[c] = static_cast<T>(mu);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + state.eps));
      double unbiased = N > 1 ? sq / static_cast<double>(N - 1) : var;
      state.running_mean[c] = static_cast<T>((1.0 - state.momentum) * state.running_mean[c] +
                                             state.momentum * mu);
      state.running_var[c] = static_cast<T>((1.0 - state.momentum) * state.running_var[c] +
                                            state.momentum * unbiased);
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = state.running_mean[c];
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(state.running_var[c]) + state.eps));
    }
  }
  BasicTensor<T> xhat(s), y(s);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t off = (b * C + c) * P;
      for (std::size_t p = 0; p < P; ++p) {
        T xh = (x->value[off + p] - mean[c]) * inv_std[c];
        xhat[off + p] = xh;
        y[off + p] = gamma->value[c] * xh + beta->value[c];
      }
    }
  }
  const bool batch_stats = tape.training();
  bool rg = needs(x) || needs(gamma) || needs(beta);
  return tape.record(std::move(y), rg, [=, xhat = std::move(xhat)](const BasicTensor<T>& g) {
    for (std::size_t c = 0; c < C; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t off = (b * C + c) * P;
        for (std::size_t p = 0; p < P; ++p) {
          sum_g += g[off + p];
          sum_gx += g[off + p] * xhat[off + p];
        }
      }
      if (needs(gamma)) gamma->grad_buffer()[c] += static_cast<T>(sum_gx);
      if (needs(beta)) beta->grad_buffer()[c] += static_cast<T>(sum_g);
      if (!needs(x)) continue;
      auto& dx = x->grad_buffer();
      const double gm = gamma->value[c];
      const double is = inv_std[c];
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t off = (b * C + c) * P;
        for (std::size_t p = 0; p < P; ++p) {
          double dxh = g[off + p] * gm;
          if (batch_stats) {
            // d/dx of (x - mean)/std with batch statistics.
            double term = dxh - gm * (sum_g + xhat[off + p] * sum_gx) / static_cast<double>(N);
            dx[off + p] += static_cast<T>(is * term);
          } else {
            dx[off + p] += static_cast<T>(is * dxh);
          }
        }
      }
    }
  });
}

template <typename T>
Var<T> layernorm(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                 double eps) {
  const auto& s = x->value.shape();
  const std::size_t D = s.back();
  if (gamma->value.shape() != Shape{D} || beta->value.shape() != Shape{D}) {
    shape_error("layernorm", "parameters must match the last axis");
  }
  const std::size_t rows = x->value.size() / D;
  BasicTensor<T> xhat(s), y(s), inv_std(Shape{rows});
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x->value.data().data() + r * D;
    double mu = 0.0;
    for (std::size_t d = 0; d < D; ++d) mu += xr[d];
    mu /= static_cast<double>(D);
    double var = 0.0;
    for (std::size_t d = 0; d < D; ++d) var += (xr[d] - mu) * (xr[d] - mu);
    var /= static_cast<double>(D);
    double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = static_cast<T>(is);
    for (std::size_t d = 0; d < D; ++d) {
      T xh = static_cast<T>((xr[d] - mu) * is);
      xhat[r * D + d] = xh;
      y[r * D + d] = gamma->value[d] * xh + beta->value[d];
    }
  }
  bool rg = needs(x) || needs(gamma) || needs(beta);
  return tape.record(std::move(y), rg,
                     [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](const BasicTensor<T>& g) {
    for (std::size_t r = 0; r < rows; ++r) {
      double sum_dxh = 0.0, sum_dxh_xh = 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        const std::size_t i = r * D + d;
        if (needs(gamma)) gamma->grad_buffer()[d] += g[i] * xhat[i];
        if (needs(beta)) beta->grad_buffer()[d] += g[i];
        double dxh = static_cast<double>(g[i]) * gamma->value[d];
        sum_dxh += dxh;
        sum_dxh_xh += dxh * xhat[i];
      }
      if (!needs(x)) continue;
      auto& dx = x->grad_buffer();
      for (std::size_t d = 0; d < D; ++d) {
        const std::size_t i = r * D + d;
        double dxh = static_cast<double>(g[i]) * gamma->value[d];
        dx[i] += static_cast<T>(inv_std[r] *
                                (dxh - (sum_dxh + xhat[i] * sum_dxh_xh) / static_cast<double>(D)));
      }
    }
  });
}

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  if (a->value.shape() != b->value.shape()) {
    shape_error("add", shape_to_string(a->value.shape()) + " vs " + shape_to_string(b->value.shape()));
  }
  BasicTensor<T> y = a->value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b->value[i];
  return tape.record(std::move(y), needs(a) || needs(b), [a, b](const BasicTensor<T>& g) {
    for (const auto* v : {&a, &b}) {
      if (!needs(*v)) continue;
      auto& d = (*v)->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

template <typename T>
Var<T> add_positional(Tape<T>& tape, const Var<T>& x, const Var<T>& pos) {
  require_rank("add_positional", x, 3);
  const auto& s = x->value.shape();
  if (pos->value.shape() != Shape{s[1], s[2]}) {
    shape_error("add_positional", "embedding " + shape_to_string(pos->value.shape()) +
                                      " does not match tokens " + shape_to_string(s));
  }
  const std::size_t block = s[1] * s[2];
  BasicTensor<T> y = x->value;
  for (std::size_t b = 0; b < s[0]; ++b) {
    for (std::size_t i = 0; i < block; ++i) y[b * block + i] += pos->value[i];
  }
  return tape.record(std::move(y), needs(x) || needs(pos), [x, pos, block, B = s[0]](const BasicTensor<T>& g) {
    if (needs(x)) {
      auto& dx = x->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    }
    if (needs(pos)) {
      auto& dp = pos->grad_buffer();
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < block; ++i) dp[i] += g[b * block + i];
      }
    }
  });
}

template <typename T>
Var<T> to_tokens(Tape<T>& tape, const Var<T>& x) {
  require_rank("to_tokens", x, 4);
  const auto& s = x->value.shape();
  const std::size_t B = s[0], C = s[1], P = s[2] * s[3];
  BasicTensor<T> y(Shape{B, P, C});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t p = 0; p < P; ++p) y[(b * P + p) * C + c] = x->value[(b * C + c) * P + p];
    }
  }
  return tape.record(std::move(y), needs(x), [x, B, C, P](const BasicTensor<T>& g) {
    auto& dx = x->grad_buffer();
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t p = 0; p < P; ++p) dx[(b * C + c) * P + p] += g[(b * P + p) * C + c];
      }
    }
  });
}

template <typename T>
Var<T> from_tokens(Tape<T>& tape, const Var<T>& x, std::size_t height, std::size_t width) {
  require_rank("from_tokens", x, 3);
  const auto& s = x->value.shape();
  const std::size_t B = s[0], P = s[1], C = s[2];
  if (P != height * width) shape_error("from_tokens", "token count does not match grid");
  BasicTensor<T> y(Shape{B, C, height, width});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t c = 0; c < C; ++c) y[(b * C + c) * P + p] = x->value[(b * P + p) * C + c];
    }
  }
  return tape.record(std::move(y), needs(x), [x, B, C, P](const BasicTensor<T>& g) {
    auto& dx = x->grad_buffer();
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t p = 0; p < P; ++p) {
        for (std::size_t c = 0; c < C; ++c) dx[(b * P + p) * C + c] += g[(b * C + c) * P + p];
      }
    }
  });
}

template <typename T>
Var<T> attention(Tape<T>& tape, const Var<T>& q, const Var<T>& k, const Var<T>& v,
                 std::size_t heads) {
  require_rank("attention", q, 3);
  const auto& s = q->value.shape();
  if (k->value.shape() != s || v->value.shape() != s) shape_error("attention", "q/k/v shapes differ");
  const std::size_t B = s[0], L = s[1], D = s[2];
  if (heads == 0 || D % heads != 0) shape_error("attention", "model dim not divisible by heads");
  const std::size_t dh = D / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  BasicTensor<T> probs(Shape{B, heads, L, L});
  BasicTensor<T> out(s);
  std::vector<double> row(L);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < L; ++i) {
        const T* qi = q->value.data().data() + (b * L + i) * D + h * dh;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < L; ++j) {
          const T* kj = k->value.data().data() + (b * L + j) * D + h * dh;
          double acc = 0.0;
          for (std::size_t d = 0; d < dh; ++d) acc += static_cast<double>(qi[d]) * kj[d];
          row[j] = acc * scale;
          mx = std::max(mx, row[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
          row[j] = std::exp(row[j] - mx);
          z += row[j];
        }
        T* pr = probs.data().data() + ((b * heads + h) * L + i) * L;
        T* oi = out.data().data() + (b * L + i) * D + h * dh;
        for (std::size_t j = 0; j < L; ++j) {
          pr[j] = static_cast<T>(row[j] / z);
          const T* vj = v->value.data().data() + (b * L + j) * D + h * dh;
          for (std::size_t d = 0; d < dh; ++d) oi[d] += pr[j] * vj[d];
        }
      }
    }
  }

  bool rg = needs(q) || needs(k) || needs(v);
  return tape.record(std::move(out), rg,
                     [=, probs = std::move(probs)](const BasicTensor<T>& g) {
    T* dq = needs(q) ? q->grad_buffer().data().data() : nullptr;
    T* dk = needs(k) ? k->grad_buffer().data().data() : nullptr;
    T* dv = needs(v) ? v->grad_buffer().data().data() : nullptr;
    std::vector<double> dp(L);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < L; ++i) {
          const T* gi = g.data().data() + (b * L + i) * D + h * dh;
          const T* pr = probs.data().data() + ((b * heads + h) * L + i) * L;
          double dot = 0.0;
          for (std::size_t j = 0; j < L; ++j) {
            const std::size_t vj = (b * L + j) * D + h * dh;
            double acc = 0.0;
            for (std::size_t d = 0; d < dh; ++d) {
              acc += static_cast<double>(gi[d]) * v->value[vj + d];
              if (dv) dv[vj + d] += pr[j] * gi[d];
            }
            dp[j] = acc;
            dot += acc * pr[j];
          }
          const std::size_t qi = (b * L + i) * D + h * dh;
          for (std::size_t j = 0; j < L; ++j) {
            const double ds = pr[j] * (dp[j] - dot) * scale;
            if (ds == 0.0) continue;
            const std::size_t kj = (b * L + j) * D + h * dh;
            for (std::size_t d = 0; d < dh; ++d) {
              if (dq) dq[qi + d] += static_cast<T>(ds * k->value[kj + d]);
              if (dk) dk[kj + d] += static_cast<T>(ds * q->value[qi + d]);
            }
          }
        }
      }
    }
  });
}

template <typename T>
std::vector<Var<T>> split_last(Tape<T>& tape, const Var<T>& x, std::size_t parts) {
  const auto& s = x->value.shape();
  const std::size_t D = s.back();
  if (parts == 0 || D % parts != 0) shape_error("split_last", "last axis not divisible");
  const std::size_t chunk = D / parts, rows = x->value.size() / D;
  std::vector<Var<T>> out;
  for (std::size_t part = 0; part < parts; ++part) {
    Shape ps = s;
    ps.back() = chunk;
    BasicTensor<T> y(ps);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(x->value.data().begin() + static_cast<std::ptrdiff_t>(r * D + part * chunk), chunk,
                  y.data().begin() + static_cast<std::ptrdiff_t>(r * chunk));
    }
    out.push_back(tape.record(std::move(y), needs(x), [x, rows, D, chunk, part](const BasicTensor<T>& g) {
      auto& dx = x->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < chunk; ++c) dx[r * D + part * chunk + c] += g[r * chunk + c];
      }
    }));
  }
  return out;
}

template <typename T>
Var<T> weighted_sum(Tape<T>& tape, const Var<T>& x, const BasicTensor<T>& weights) {
  if (weights.size() != x->value.size()) shape_error("weighted_sum", "weight count mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += static_cast<double>(x->value[i]) * weights[i];
  BasicTensor<T> y(Shape{1}, static_cast<T>(acc));
  return tape.record(std::move(y), needs(x), [x, weights](const BasicTensor<T>& g) {
    auto& dx = x->grad_buffer();
    for (std::size_t i = 0; i < weights.size(); ++i) dx[i] += g[0] * weights[i];
  });
}

template <typename T>
void Tape<T>::backward(const Var<T>& loss) {
  if (!loss || nodes_.empty() || nodes_.back() != loss) {
    throw Error(ErrorCode::kUsage, "backward called without a recorded forward pass for this loss");
  }
  if (loss->value.size() != 1) throw Error(ErrorCode::kUsage, "backward requires a scalar loss");
  loss->grad_buffer().fill(T{1});
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node<T>& node = **it;
    if (!node.grad.empty() && node.backward) node.backward(node.grad);
  }
  nodes_.clear();
}

#define FEATPROBE_INSTANTIATE(T)                                                                   \
  template class Tape<T>;                                                                          \
  template Var<T> dense(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&);                    \
  template Var<T> relu(Tape<T>&, const Var<T>&);                                                   \
  template Var<T> dropout(Tape<T>&, const Var<T>&, double);                                        \
  template Var<T> dropout2d(Tape<T>&, const Var<T>&, double);                                      \
  template Var<T> conv3x3(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&);                  \
  template Var<T> batchnorm2d(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&,               \
                              BatchNormState<T>&);                                                 \
  template Var<T> layernorm(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&, double);        \
  template Var<T> add(Tape<T>&, const Var<T>&, const Var<T>&);                                     \
  template Var<T> add_positional(Tape<T>&, const Var<T>&, const Var<T>&);                          \
  template Var<T> to_tokens(Tape<T>&, const Var<T>&);                                              \
  template Var<T> from_tokens(Tape<T>&, const Var<T>&, std::size_t, std::size_t);                  \
  template Var<T> attention(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&, std::size_t);   \
  template std::vector<Var<T>> split_last(Tape<T>&, const Var<T>&, std::size_t);                   \
  template Var<T> weighted_sum(Tape<T>&, const Var<T>&, const BasicTensor<T>&);

FEATPROBE_INSTANTIATE(float)
FEATPROBE_INSTANTIATE(double)

#undef FEATPROBE_INSTANTIATE

}  // namespace featprobe::nn
