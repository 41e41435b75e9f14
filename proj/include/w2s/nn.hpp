#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "w2s/gemm.hpp"
#include "w2s/tensor.hpp"

namespace w2s {

// Activation handle on a tape. id identifies the gradient slot; -1 marks a
// value that is not differentiated through.
template <typename T>
struct Var {
  Tensor4<T> value;
  int id = -1;
};

// Reverse-mode tape. Layers record one closure per forward call; backward
// seeds the root gradient and replays closures newest first. A tape is
// single-use.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> make_var(Tensor4<T> v) {
    Var<T> out{std::move(v), static_cast<int>(shapes_.size())};
    shapes_.push_back(out.value.shape);
    return out;
  }

  void record(std::function<void(Tape<T>&)> fn) { nodes_.push_back(std::move(fn)); }

  // Accumulated gradient for an activation, zero-initialized on first touch.
  Tensor4<T>& grad(int id) {
    if (id < 0 || id >= static_cast<int>(shapes_.size()))
      throw std::logic_error("tape: gradient requested for an unknown activation");
    if (grads_.size() < shapes_.size()) grads_.resize(shapes_.size());
    Tensor4<T>& g = grads_[static_cast<std::size_t>(id)];
    if (g.data.empty()) {
      const auto& s = shapes_[static_cast<std::size_t>(id)];
      g = Tensor4<T>(s[0], s[1], s[2], s[3]);
    }
    return g;
  }

  void backward(const Var<T>& root, const Tensor4<T>& seed) {
    if (nodes_.empty()) throw std::logic_error("tape: backward before any forward");
    if (spent_) throw std::logic_error("tape: backward on a spent tape");
    if (!seed.same_shape(root.value)) throw std::invalid_argument("tape: seed shape mismatch");
    spent_ = true;
    grad(root.id) = seed;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)(*this);
  }

  bool spent() const { return spent_; }

 private:
  std::vector<std::array<int, 4>> shapes_;
  std::vector<Tensor4<T>> grads_;
  std::vector<std::function<void(Tape<T>&)>> nodes_;
  bool spent_ = false;
};

enum class ParamInit { uniform_fan_in, zeros, ones };

// View into one named parameter or buffer of a layer.
template <typename T>
struct ParamRef {
  std::string name;
  std::vector<T>* value = nullptr;
  std::vector<T>* grad = nullptr;  // null for buffers
  std::vector<std::uint32_t> dims;
  ParamInit init = ParamInit::zeros;
  int fan_in = 0;
  bool trainable = true;
};

namespace detail {

template <typename T>
void accumulate(std::vector<T>& dst, const std::vector<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace detail

// ---- convolution ----

// 2d convolution, stride 1, square kernel, zero padding. Forward and backward
// run as GEMM over im2row tiles so peak workspace stays small.
template <typename T>
class Conv2d {
 public:
  Conv2d(int in_c, int out_c, int kernel, int padding, bool with_bias)
      : in_c_(in_c), out_c_(out_c), k_(kernel), pad_(padding),
        weight(out_c, in_c, kernel, kernel), weight_grad(out_c, in_c, kernel, kernel) {
    if (with_bias) {
      bias.assign(static_cast<std::size_t>(out_c), T(0));
      bias_grad.assign(static_cast<std::size_t>(out_c), T(0));
    }
  }

  Tensor4<T> forward(const Tensor4<T>& x) const {
    Tensor4<T> y;
    run_forward(x, y);
    return y;
  }

  Var<T> forward(Tape<T>& tape, const Var<T>& x) {
    Tensor4<T> yv;
    run_forward(x.value, yv);
    Var<T> y = tape.make_var(std::move(yv));
    const int xid = x.id, yid = y.id;
    Tensor4<T> x_cache = x.value;
    tape.record([this, xid, yid, x_cache = std::move(x_cache)](Tape<T>& t) {
      backward_node(t, x_cache, xid, yid);
    });
    return y;
  }

  void zero_grad() {
    weight_grad.fill(T(0));
    std::fill(bias_grad.begin(), bias_grad.end(), T(0));
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".weight", &weight.data, &weight_grad.data,
                   {static_cast<std::uint32_t>(out_c_), static_cast<std::uint32_t>(in_c_),
                    static_cast<std::uint32_t>(k_), static_cast<std::uint32_t>(k_)},
                   ParamInit::uniform_fan_in, in_c_ * k_ * k_, true});
    if (!bias.empty())
      out.push_back({prefix + ".bias", &bias, &bias_grad,
                     {static_cast<std::uint32_t>(out_c_)},
                     ParamInit::zeros, 0, true});
  }

  std::int64_t param_count() const {
    return static_cast<std::int64_t>(out_c_) * in_c_ * k_ * k_ +
           static_cast<std::int64_t>(bias.size());
  }

  int in_channels() const { return in_c_; }
  int out_channels() const { return out_c_; }
  int kernel() const { return k_; }

  Tensor4<T> weight;
  std::vector<T> bias;
  Tensor4<T> weight_grad;
  std::vector<T> bias_grad;

  // The first conv sits on a frozen frontend; skipping its input gradient
  // saves the largest col2im of the backward pass.
  bool input_grad = true;

  static constexpr int kTileRows = 4096;

 private:
  int in_c_, out_c_, k_, pad_;

  void check_input(const Tensor4<T>& x) const {
    if (x.shape[1] != in_c_) throw std::invalid_argument("conv: channel mismatch");
    const int out_h = x.shape[2] + 2 * pad_ - k_ + 1;
    const int out_w = x.shape[3] + 2 * pad_ - k_ + 1;
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("conv: input smaller than kernel");
  }

  // Rows [r0, r0+rows) of the im2row matrix for batch b, [rows x in_c*k*k].
  void im2row_tile(const Tensor4<T>& x, int b, int out_w, int r0, int rows, T* out) const {
    const int H = x.shape[2], W = x.shape[3];
    const int ck = in_c_ * k_ * k_;
    for (int r = 0; r < rows; ++r) {
      const int oh = (r0 + r) / out_w, ow = (r0 + r) % out_w;
      T* row = out + static_cast<std::size_t>(r) * ck;
      for (int c = 0; c < in_c_; ++c) {
        const T* pl = x.plane(b, c);
        for (int kh = 0; kh < k_; ++kh) {
          const int ih = oh + kh - pad_;
          for (int kw = 0; kw < k_; ++kw) {
            const int iw = ow + kw - pad_;
            *row++ = (ih >= 0 && ih < H && iw >= 0 && iw < W)
                         ? pl[static_cast<std::size_t>(ih) * W + iw]
                         : T(0);
          }
        }
      }
    }
  }

  void run_forward(const Tensor4<T>& x, Tensor4<T>& y) const {
    check_input(x);
    const int B = x.shape[0];
    const int out_h = x.shape[2] + 2 * pad_ - k_ + 1;
    const int out_w = x.shape[3] + 2 * pad_ - k_ + 1;
    const int hw = out_h * out_w;
    const int ck = in_c_ * k_ * k_;
    y = Tensor4<T>(B, out_c_, out_h, out_w);
    std::vector<T> tile(static_cast<std::size_t>(std::min(hw, kTileRows)) * ck);
    for (int b = 0; b < B; ++b) {
      T* yb = y.plane(b, 0);
      for (int r0 = 0; r0 < hw; r0 += kTileRows) {
        const int rows = std::min(kTileRows, hw - r0);
        im2row_tile(x, b, out_w, r0, rows, tile.data());
        gemm<T>(false, true, out_c_, rows, ck, T(1), weight.data.data(), ck, tile.data(), ck,
                T(0), yb + r0, hw);
      }
      if (!bias.empty())
        for (int oc = 0; oc < out_c_; ++oc) {
          T* p = yb + static_cast<std::size_t>(oc) * hw;
          for (int i = 0; i < hw; ++i) p[i] += bias[static_cast<std::size_t>(oc)];
        }
    }
  }

  void backward_node(Tape<T>& t, const Tensor4<T>& x, int xid, int yid) {
    const Tensor4<T>& dy = t.grad(yid);
    const int B = x.shape[0];
    const int out_h = dy.shape[2], out_w = dy.shape[3];
    const int hw = out_h * out_w;
    const int ck = in_c_ * k_ * k_;
    const int H = x.shape[2], W = x.shape[3];
    std::vector<T> tile(static_cast<std::size_t>(std::min(hw, kTileRows)) * ck);
    std::vector<T> dxtile(tile.size());
    Tensor4<T>* dx = xid >= 0 && input_grad ? &t.grad(xid) : nullptr;
    for (int b = 0; b < B; ++b) {
      const T* dyb = dy.plane(b, 0);
      for (int r0 = 0; r0 < hw; r0 += kTileRows) {
        const int rows = std::min(kTileRows, hw - r0);
        im2row_tile(x, b, out_w, r0, rows, tile.data());
        gemm<T>(false, false, out_c_, ck, rows, T(1), dyb + r0, hw, tile.data(), ck, T(1),
                weight_grad.data.data(), ck);
        if (dx) {
          gemm<T>(true, false, rows, ck, out_c_, T(1), dyb + r0, hw, weight.data.data(), ck,
                  T(0), dxtile.data(), ck);
          // col2im: scatter-add tile rows back onto the input gradient.
          for (int r = 0; r < rows; ++r) {
            const int oh = (r0 + r) / out_w, ow = (r0 + r) % out_w;
            const T* row = dxtile.data() + static_cast<std::size_t>(r) * ck;
            for (int c = 0; c < in_c_; ++c) {
              T* pl = dx->plane(b, c);
              for (int kh = 0; kh < k_; ++kh) {
                const int ih = oh + kh - pad_;
                for (int kw = 0; kw < k_; ++kw) {
                  const int iw = ow + kw - pad_;
                  if (ih >= 0 && ih < H && iw >= 0 && iw < W)
                    pl[static_cast<std::size_t>(ih) * W + iw] += *row;
                  ++row;
                }
              }
            }
          }
        }
      }
      if (!bias.empty())
        for (int oc = 0; oc < out_c_; ++oc) {
          const T* p = dyb + static_cast<std::size_t>(oc) * hw;
          T acc = 0;
          for (int i = 0; i < hw; ++i) acc += p[i];
          bias_grad[static_cast<std::size_t>(oc)] += acc;
        }
    }
  }
};

// ---- batch normalization ----

// Channel-wise normalization. Training uses current-batch statistics and
// maintains running ones (momentum 0.1); eval and frozen-stats training use
// the running statistics.
template <typename T>
class BatchNorm2d {
 public:
  explicit BatchNorm2d(int channels)
      : c_(channels),
        gamma(static_cast<std::size_t>(channels), T(1)),
        beta(static_cast<std::size_t>(channels), T(0)),
        gamma_grad(static_cast<std::size_t>(channels), T(0)),
        beta_grad(static_cast<std::size_t>(channels), T(0)),
        running_mean(static_cast<std::size_t>(channels), T(0)),
        running_var(static_cast<std::size_t>(channels), T(1)) {}

  Tensor4<T> forward(const Tensor4<T>& x) const {
    check_input(x);
    Tensor4<T> y(x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
    for (int c = 0; c < c_; ++c) {
      const T inv = T(1) / std::sqrt(running_var[static_cast<std::size_t>(c)] + eps);
      const T g = gamma[static_cast<std::size_t>(c)] * inv;
      const T b0 = beta[static_cast<std::size_t>(c)] -
                   running_mean[static_cast<std::size_t>(c)] * g;
      for (int b = 0; b < x.shape[0]; ++b) {
        const T* in = x.plane(b, c);
        T* out = y.plane(b, c);
        const int n = x.shape[2] * x.shape[3];
        for (int i = 0; i < n; ++i) out[i] = g * in[i] + b0;
      }
    }
    return y;
  }

  Var<T> forward(Tape<T>& tape, const Var<T>& x) {
    check_input(x.value);
    const int B = x.value.shape[0], H = x.value.shape[2], W = x.value.shape[3];
    const std::int64_t n = static_cast<std::int64_t>(B) * H * W;
    Tensor4<T> xhat(B, c_, H, W);
    std::vector<T> inv_std(static_cast<std::size_t>(c_));

    if (frozen_stats) {
      for (int c = 0; c < c_; ++c) {
        inv_std[c] = T(1) / std::sqrt(running_var[static_cast<std::size_t>(c)] + eps);
        for (int b = 0; b < B; ++b) {
          const T* in = x.value.plane(b, c);
          T* xh = xhat.plane(b, c);
          for (int i = 0; i < H * W; ++i)
            xh[i] = (in[i] - running_mean[static_cast<std::size_t>(c)]) * inv_std[c];
        }
      }
    } else {
      for (int c = 0; c < c_; ++c) {
        T mean = 0;
        for (int b = 0; b < B; ++b) {
          const T* in = x.value.plane(b, c);
          for (int i = 0; i < H * W; ++i) mean += in[i];
        }
        mean /= static_cast<T>(n);
        T var = 0;
        for (int b = 0; b < B; ++b) {
          const T* in = x.value.plane(b, c);
          for (int i = 0; i < H * W; ++i) {
            const T d = in[i] - mean;
            var += d * d;
          }
        }
        var /= static_cast<T>(n);
        inv_std[c] = T(1) / std::sqrt(var + eps);
        for (int b = 0; b < B; ++b) {
          const T* in = x.value.plane(b, c);
          T* xh = xhat.plane(b, c);
          for (int i = 0; i < H * W; ++i) xh[i] = (in[i] - mean) * inv_std[c];
        }
        const T unbias = n > 1 ? static_cast<T>(n) / static_cast<T>(n - 1) : T(1);
        running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * mean;
        running_var[c] = (T(1) - momentum) * running_var[c] + momentum * var * unbias;
      }
    }

    Tensor4<T> yv(B, c_, H, W);
    for (int c = 0; c < c_; ++c)
      for (int b = 0; b < B; ++b) {
        const T* xh = xhat.plane(b, c);
        T* out = yv.plane(b, c);
        for (int i = 0; i < H * W; ++i)
          out[i] = gamma[static_cast<std::size_t>(c)] * xh[i] + beta[static_cast<std::size_t>(c)];
      }

    Var<T> y = tape.make_var(std::move(yv));
    const int xid = x.id, yid = y.id;
    const bool batch_stats = !frozen_stats;
    tape.record([this, xid, yid, batch_stats, n, xhat = std::move(xhat),
                 inv_std = std::move(inv_std)](Tape<T>& t) {
      const Tensor4<T>& dy = t.grad(yid);
      const int B2 = dy.shape[0], HW = dy.shape[2] * dy.shape[3];
      Tensor4<T>* dx = xid >= 0 ? &t.grad(xid) : nullptr;
      for (int c = 0; c < c_; ++c) {
        T sum_dy = 0, sum_dy_xhat = 0;
        for (int b = 0; b < B2; ++b) {
          const T* d = dy.plane(b, c);
          const T* xh = xhat.plane(b, c);
          for (int i = 0; i < HW; ++i) {
            sum_dy += d[i];
            sum_dy_xhat += d[i] * xh[i];
          }
        }
        beta_grad[static_cast<std::size_t>(c)] += sum_dy;
        gamma_grad[static_cast<std::size_t>(c)] += sum_dy_xhat;
        if (!dx) continue;
        const T g = gamma[static_cast<std::size_t>(c)];
        if (batch_stats) {
          const T mean_dy = sum_dy / static_cast<T>(n);
          const T mean_dy_xhat = sum_dy_xhat / static_cast<T>(n);
          for (int b = 0; b < B2; ++b) {
            const T* d = dy.plane(b, c);
            const T* xh = xhat.plane(b, c);
            T* out = dx->plane(b, c);
            for (int i = 0; i < HW; ++i)
              out[i] += g * inv_std[c] * (d[i] - mean_dy - xh[i] * mean_dy_xhat);
          }
        } else {
          for (int b = 0; b < B2; ++b) {
            const T* d = dy.plane(b, c);
            T* out = dx->plane(b, c);
            for (int i = 0; i < HW; ++i) out[i] += g * inv_std[c] * d[i];
          }
        }
      }
    });
    return y;
  }

  void zero_grad() {
    std::fill(gamma_grad.begin(), gamma_grad.end(), T(0));
    std::fill(beta_grad.begin(), beta_grad.end(), T(0));
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    const std::vector<std::uint32_t> d{static_cast<std::uint32_t>(c_)};
    out.push_back({prefix + ".gamma", &gamma, &gamma_grad, d, ParamInit::ones, 0, true});
    out.push_back({prefix + ".beta", &beta, &beta_grad, d, ParamInit::zeros, 0, true});
    out.push_back({prefix + ".running_mean", &running_mean, nullptr, d, ParamInit::zeros, 0, false});
    out.push_back({prefix + ".running_var", &running_var, nullptr, d, ParamInit::ones, 0, false});
  }

  std::int64_t param_count() const { return 2 * static_cast<std::int64_t>(c_); }

  std::vector<T> gamma, beta, gamma_grad, beta_grad, running_mean, running_var;
  T eps = static_cast<T>(1e-5);
  T momentum = static_cast<T>(0.1);
  bool frozen_stats = false;

 private:
  int c_;

  void check_input(const Tensor4<T>& x) const {
    if (x.shape[1] != c_) throw std::invalid_argument("batchnorm: channel mismatch");
  }
};

// ---- linear ----

// Affine map over the width axis: (B, C, H, in) -> (B, C, H, out).
template <typename T>
class Linear {
 public:
  Linear(int in, int out)
      : in_(in), out_(out), weight(1, 1, out, in), weight_grad(1, 1, out, in),
        bias(static_cast<std::size_t>(out), T(0)), bias_grad(static_cast<std::size_t>(out), T(0)) {}

  Tensor4<T> forward(const Tensor4<T>& x) const {
    Tensor4<T> y;
    run_forward(x, y);
    return y;
  }

  Var<T> forward(Tape<T>& tape, const Var<T>& x) {
    Tensor4<T> yv;
    run_forward(x.value, yv);
    Var<T> y = tape.make_var(std::move(yv));
    const int xid = x.id, yid = y.id;
    Tensor4<T> x_cache = x.value;
    tape.record([this, xid, yid, x_cache = std::move(x_cache)](Tape<T>& t) {
      const Tensor4<T>& dy = t.grad(yid);
      const int rows = dy.shape[0] * dy.shape[1] * dy.shape[2];
      gemm<T>(true, false, out_, in_, rows, T(1), dy.data.data(), out_, x_cache.data.data(), in_,
              T(1), weight_grad.data.data(), in_);
      for (int r = 0; r < rows; ++r)
        for (int o = 0; o < out_; ++o)
          bias_grad[static_cast<std::size_t>(o)] += dy.data[static_cast<std::size_t>(r) * out_ + o];
      if (xid >= 0) {
        Tensor4<T>& dx = t.grad(xid);
        gemm<T>(false, false, rows, in_, out_, T(1), dy.data.data(), out_, weight.data.data(),
                in_, T(1), dx.data.data(), in_);
      }
    });
    return y;
  }

  void zero_grad() {
    weight_grad.fill(T(0));
    std::fill(bias_grad.begin(), bias_grad.end(), T(0));
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".weight", &weight.data, &weight_grad.data,
                   {static_cast<std::uint32_t>(out_), static_cast<std::uint32_t>(in_)},
                   ParamInit::uniform_fan_in, in_, true});
    out.push_back({prefix + ".bias", &bias, &bias_grad,
                   {static_cast<std::uint32_t>(out_)}, ParamInit::zeros, 0, true});
  }

  std::int64_t param_count() const {
    return static_cast<std::int64_t>(out_) * in_ + out_;
  }

  Tensor4<T> weight, weight_grad;
  std::vector<T> bias, bias_grad;

 private:
  int in_, out_;

  void run_forward(const Tensor4<T>& x, Tensor4<T>& y) const {
    if (x.shape[3] != in_) throw std::invalid_argument("linear: width mismatch");
    const int rows = x.shape[0] * x.shape[1] * x.shape[2];
    y = Tensor4<T>(x.shape[0], x.shape[1], x.shape[2], out_);
    gemm<T>(false, true, rows, out_, in_, T(1), x.data.data(), in_, weight.data.data(), in_,
            T(0), y.data.data(), out_);
    for (int r = 0; r < rows; ++r)
      for (int o = 0; o < out_; ++o)
        y.data[static_cast<std::size_t>(r) * out_ + o] += bias[static_cast<std::size_t>(o)];
  }
};

// ---- stateless ops ----

template <typename T>
Tensor4<T> relu(const Tensor4<T>& x) {
  Tensor4<T> y = x;
  for (T& v : y.data) v = v > T(0) ? v : T(0);
  return y;
}

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x) {
  Var<T> y = tape.make_var(relu(x.value));
  std::vector<std::uint8_t> mask(y.value.data.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = y.value.data[i] > T(0);
  const int xid = x.id, yid = y.id;
  tape.record([xid, yid, mask = std::move(mask)](Tape<T>& t) {
    const Tensor4<T>& dy = t.grad(yid);
    Tensor4<T>& dx = t.grad(xid);
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) dx.data[i] += dy.data[i];
  });
  return y;
}

// 3x3 max pool, stride 2, padding 1; out-of-range positions act as -inf.
template <typename T>
Tensor4<T> maxpool_3x3_s2(const Tensor4<T>& x, std::vector<std::int32_t>* argmax = nullptr) {
  const int B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  const int oh = (H - 1) / 2 + 1, ow = (W - 1) / 2 + 1;
  Tensor4<T> y(B, C, oh, ow);
  if (argmax) argmax->assign(y.data.size(), -1);
  std::size_t oi = 0;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const T* in = x.plane(b, c);
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j, ++oi) {
          T best = -std::numeric_limits<T>::infinity();
          std::int32_t best_idx = -1;
          for (int di = -1; di <= 1; ++di) {
            const int h = 2 * i + di;
            if (h < 0 || h >= H) continue;
            for (int dj = -1; dj <= 1; ++dj) {
              const int w = 2 * j + dj;
              if (w < 0 || w >= W) continue;
              const T v = in[static_cast<std::size_t>(h) * W + w];
              if (v > best) {
                best = v;
                best_idx = static_cast<std::int32_t>(h * W + w);
              }
            }
          }
          y.data[oi] = best;
          if (argmax) (*argmax)[oi] = best_idx;
        }
    }
  return y;
}

template <typename T>
Var<T> maxpool_3x3_s2(Tape<T>& tape, const Var<T>& x) {
  std::vector<std::int32_t> argmax;
  Var<T> y = tape.make_var(maxpool_3x3_s2(x.value, &argmax));
  const int xid = x.id, yid = y.id;
  const int C = x.value.shape[1];
  const int plane = x.value.shape[2] * x.value.shape[3];
  const int oplane = y.value.shape[2] * y.value.shape[3];
  tape.record([xid, yid, C, plane, oplane, argmax = std::move(argmax)](Tape<T>& t) {
    const Tensor4<T>& dy = t.grad(yid);
    Tensor4<T>& dx = t.grad(xid);
    const int B = dy.shape[0];
    std::size_t oi = 0;
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        T* dplane = dx.data.data() + (static_cast<std::size_t>(b) * C + c) * plane;
        for (int i = 0; i < oplane; ++i, ++oi) dplane[argmax[oi]] += dy.data[oi];
      }
  });
  return y;
}

// Softmax over the height axis, independently per (batch, channel, width) lane.
template <typename T>
Tensor4<T> softmax_height(const Tensor4<T>& x) {
  const int B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  Tensor4<T> y(B, C, H, W);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const T* in = x.plane(b, c);
      T* out = y.plane(b, c);
      for (int w = 0; w < W; ++w) {
        T m = -std::numeric_limits<T>::infinity();
        for (int h = 0; h < H; ++h) m = std::max(m, in[static_cast<std::size_t>(h) * W + w]);
        T s = 0;
        for (int h = 0; h < H; ++h) {
          const T e = std::exp(in[static_cast<std::size_t>(h) * W + w] - m);
          out[static_cast<std::size_t>(h) * W + w] = e;
          s += e;
        }
        const T inv = T(1) / s;
        for (int h = 0; h < H; ++h) out[static_cast<std::size_t>(h) * W + w] *= inv;
      }
    }
  return y;
}

template <typename T>
Var<T> softmax_height(Tape<T>& tape, const Var<T>& x) {
  Var<T> y = tape.make_var(softmax_height(x.value));
  const int xid = x.id, yid = y.id;
  Tensor4<T> y_cache = y.value;
  tape.record([xid, yid, y_cache = std::move(y_cache)](Tape<T>& t) {
    const Tensor4<T>& dy = t.grad(yid);
    Tensor4<T>& dx = t.grad(xid);
    const int B = dy.shape[0], C = dy.shape[1], H = dy.shape[2], W = dy.shape[3];
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const T* yv = y_cache.plane(b, c);
        const T* d = dy.plane(b, c);
        T* out = dx.plane(b, c);
        for (int w = 0; w < W; ++w) {
          T dot = 0;
          for (int h = 0; h < H; ++h) {
            const std::size_t i = static_cast<std::size_t>(h) * W + w;
            dot += d[i] * yv[i];
          }
          for (int h = 0; h < H; ++h) {
            const std::size_t i = static_cast<std::size_t>(h) * W + w;
            out[i] += yv[i] * (d[i] - dot);
          }
        }
      }
  });
  return y;
}

// (B, C, H, W) -> (B, H, C, W).
template <typename T>
Tensor4<T> swap_channel_height(const Tensor4<T>& x) {
  const int B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  Tensor4<T> y(B, H, C, W);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int h = 0; h < H; ++h) {
        const T* in = x.plane(b, c) + static_cast<std::size_t>(h) * W;
        T* out = y.plane(b, h) + static_cast<std::size_t>(c) * W;
        for (int w = 0; w < W; ++w) out[w] = in[w];
      }
  return y;
}

template <typename T>
Var<T> swap_channel_height(Tape<T>& tape, const Var<T>& x) {
  Var<T> y = tape.make_var(swap_channel_height(x.value));
  const int xid = x.id, yid = y.id;
  tape.record([xid, yid](Tape<T>& t) {
    const Tensor4<T>& dy = t.grad(yid);
    Tensor4<T> back = swap_channel_height(dy);
    detail::accumulate(t.grad(xid).data, back.data);
  });
  return y;
}

// Contiguous reshape; element order is preserved.
template <typename T>
Tensor4<T> reshape(const Tensor4<T>& x, int b, int c, int h, int w) {
  Tensor4<T> y(b, c, h, w);
  if (y.numel() != x.numel()) throw std::invalid_argument("reshape: element count mismatch");
  y.data = x.data;
  return y;
}

template <typename T>
Var<T> reshape(Tape<T>& tape, const Var<T>& x, int b, int c, int h, int w) {
  Var<T> y = tape.make_var(reshape(x.value, b, c, h, w));
  const int xid = x.id, yid = y.id;
  tape.record([xid, yid](Tape<T>& t) {
    const Tensor4<T>& dy = t.grad(yid);
    detail::accumulate(t.grad(xid).data, dy.data);
  });
  return y;
}

template <typename T>
Tensor4<T> multiply(const Tensor4<T>& a, const Tensor4<T>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("multiply: shape mismatch");
  Tensor4<T> y = a;
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] *= b.data[i];
  return y;
}

template <typename T>
Var<T> multiply(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  Var<T> y = tape.make_var(multiply(a.value, b.value));
  const int aid = a.id, bid = b.id, yid = y.id;
  Tensor4<T> a_cache = a.value, b_cache = b.value;
  tape.record([aid, bid, yid, a_cache = std::move(a_cache), b_cache = std::move(b_cache)](
                  Tape<T>& t) {
    const Tensor4<T>& dy = t.grad(yid);
    Tensor4<T>& da = t.grad(aid);
    Tensor4<T>& db = t.grad(bid);
    for (std::size_t i = 0; i < dy.data.size(); ++i) {
      da.data[i] += dy.data[i] * b_cache.data[i];
      db.data[i] += dy.data[i] * a_cache.data[i];
    }
  });
  return y;
}

// Sum over the height axis: (B, C, H, W) -> (B, C, 1, W).
template <typename T>
Tensor4<T> sum_height(const Tensor4<T>& x) {
  const int B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  Tensor4<T> y(B, C, 1, W);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const T* in = x.plane(b, c);
      T* out = y.plane(b, c);
      for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) out[w] += in[static_cast<std::size_t>(h) * W + w];
    }
  return y;
}

template <typename T>
Var<T> sum_height(Tape<T>& tape, const Var<T>& x) {
  Var<T> y = tape.make_var(sum_height(x.value));
  const int xid = x.id, yid = y.id;
  const int H = x.value.shape[2];
  tape.record([xid, yid, H](Tape<T>& t) {
    const Tensor4<T>& dy = t.grad(yid);
    Tensor4<T>& dx = t.grad(xid);
    const int B = dy.shape[0], C = dy.shape[1], W = dy.shape[3];
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const T* d = dy.plane(b, c);
        T* out = dx.plane(b, c);
        for (int h = 0; h < H; ++h)
          for (int w = 0; w < W; ++w) out[static_cast<std::size_t>(h) * W + w] += d[w];
      }
  });
  return y;
}

// Folds eval-mode batchnorm into the preceding bias-free conv, producing a
// biased conv with identical output.
template <typename T>
Conv2d<T> fuse_conv_bn(const Conv2d<T>& conv, const BatchNorm2d<T>& bn) {
  if (!conv.bias.empty()) throw std::invalid_argument("fuse: conv already has a bias");
  const int oc = conv.out_channels();
  Conv2d<T> fused(conv.in_channels(), oc, conv.kernel(), (conv.kernel() - 1) / 2, true);
  const std::size_t per_oc = conv.weight.data.size() / static_cast<std::size_t>(oc);
  for (int c = 0; c < oc; ++c) {
    const T inv = T(1) / std::sqrt(bn.running_var[static_cast<std::size_t>(c)] + bn.eps);
    const T scale = bn.gamma[static_cast<std::size_t>(c)] * inv;
    for (std::size_t i = 0; i < per_oc; ++i)
      fused.weight.data[c * per_oc + i] = conv.weight.data[c * per_oc + i] * scale;
    fused.bias[static_cast<std::size_t>(c)] =
        bn.beta[static_cast<std::size_t>(c)] -
        bn.running_mean[static_cast<std::size_t>(c)] * scale;
  }
  return fused;
}

}  // namespace w2s
