#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "w2s/dsp.hpp"
#include "w2s/nn.hpp"

namespace w2s {

inline constexpr int kVggChannels = 13;
inline constexpr int kTokenDim = 169;  // 13 channels x 13 mel bins
inline constexpr int kNumOutputs = 3;

template <typename T>
struct AdvTripleT {
  T arousal = 0;
  T dominance = 0;
  T valence = 0;
};
using AdvTriple = AdvTripleT<float>;

// Token embeddings for one waveform, [tokens x 169] row-major.
template <typename T>
struct TokenMatrixT {
  int tokens = 0;
  std::vector<T> values;
};
using TokenMatrix = TokenMatrixT<float>;

struct ParamCounts {
  std::int64_t frontend = 0;
  std::int64_t fused_vgg = 0;
  std::int64_t lin = 0;
  std::int64_t sof = 0;
  std::int64_t adv = 0;
  std::int64_t fused_total = 0;        // frontend + fused vgg + heads
  std::int64_t trainable_unfused = 0;  // conv + batchnorm gamma/beta + heads
};

inline int tokens_for_frames(int frames) { return (frames - 1) / 2 + 1; }
inline int tokens_for_samples(std::int64_t samples) {
  return tokens_for_frames(num_frames(samples));
}

// The trainable network: log-mel frontend (frozen), seven conv-bn-relu
// blocks with one max pool, a 1x1 projection, attention pooling over tokens,
// and a 3-way affine head.
template <typename T>
class Wav2SmallT {
 public:
  Wav2SmallT()
      : proj(kVggChannels, kVggChannels, 1, 0, true),
        lin(kTokenDim, kTokenDim), sof(kTokenDim, kTokenDim), adv(kTokenDim, kNumOutputs) {
    convs.reserve(7);
    bns.reserve(7);
    convs.emplace_back(1, kVggChannels, 3, 1, false);
    convs.back().input_grad = false;  // the frontend below it is frozen
    for (int i = 1; i < 7; ++i) convs.emplace_back(kVggChannels, kVggChannels, 3, 1, false);
    for (int i = 0; i < 7; ++i) bns.emplace_back(kVggChannels);
  }

  // ---- inference ----

  Tensor4<T> vgg(const Tensor4<T>& logmel) const {
    Tensor4<T> x = logmel;
    for (int i = 0; i < 7; ++i) {
      x = relu(bns[i].forward(convs[i].forward(x)));
      if (i == 2) x = maxpool_3x3_s2(x);
    }
    return proj.forward(x);
  }

  static Tensor4<T> to_tokens(const Tensor4<T>& vgg_out) {
    const Tensor4<T> swapped = swap_channel_height(vgg_out);
    return reshape(swapped, swapped.shape[0], 1, swapped.shape[1],
                   swapped.shape[2] * swapped.shape[3]);
  }

  AdvTripleT<T> head(const Tensor4<T>& tokens) const {
    const Tensor4<T> attn = softmax_height(sof.forward(tokens));
    const Tensor4<T> pooled = sum_height(multiply(attn, lin.forward(tokens)));
    const Tensor4<T> out = adv.forward(pooled);
    return {out.data[0], out.data[1], out.data[2]};
  }

  AdvTripleT<T> forward(const Waveform& w) const {
    return head(to_tokens(vgg(frontend.compute(w))));
  }

  TokenMatrixT<T> forward_tokens(const Waveform& w) const {
    const Tensor4<T> tokens = to_tokens(vgg(frontend.compute(w)));
    TokenMatrixT<T> out;
    out.tokens = tokens.shape[2];
    out.values = tokens.data;
    return out;
  }

  // ---- training ----

  // Forward from a precomputed log-mel input, recording the tape. The
  // returned activation has shape (1, 1, 1, 3).
  Var<T> forward_train(Tape<T>& tape, const Tensor4<T>& logmel) {
    Var<T> x = tape.make_var(logmel);
    for (int i = 0; i < 7; ++i) {
      x = relu(tape, bns[i].forward(tape, convs[i].forward(tape, x)));
      if (i == 2) x = maxpool_3x3_s2(tape, x);
    }
    x = proj.forward(tape, x);
    Var<T> sw = swap_channel_height(tape, x);
    Var<T> tokens = reshape(tape, sw, sw.value.shape[0], 1, sw.value.shape[1],
                            sw.value.shape[2] * sw.value.shape[3]);
    Var<T> attn = softmax_height(tape, sof.forward(tape, tokens));
    Var<T> pooled = sum_height(tape, multiply(tape, attn, lin.forward(tape, tokens)));
    return adv.forward(tape, pooled);
  }

  void set_frozen_stats(bool frozen) {
    for (auto& bn : bns) bn.frozen_stats = frozen;
  }

  void zero_grad() {
    for (auto& c : convs) c.zero_grad();
    for (auto& bn : bns) bn.zero_grad();
    proj.zero_grad();
    lin.zero_grad();
    sof.zero_grad();
    adv.zero_grad();
  }

  // ---- parameters ----

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    for (int i = 0; i < 7; ++i) convs[static_cast<std::size_t>(i)].collect_params("conv" + std::to_string(i + 1), out);
    for (int i = 0; i < 7; ++i) bns[static_cast<std::size_t>(i)].collect_params("bn" + std::to_string(i + 1), out);
    proj.collect_params("proj", out);
    lin.collect_params("lin", out);
    sof.collect_params("sof", out);
    adv.collect_params("adv", out);
    return out;
  }

  // Deterministic init: uniform +-sqrt(6/fan_in) for weights, zeros for
  // biases and beta, ones for gamma; running stats reset. The regression
  // head starts small with bias at the neutral point so training begins
  // from near-neutral predictions instead of the raw head's +-30 swings,
  // which would crush the concordance gradient through its variance term.
  void init_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (ParamRef<T>& p : params()) {
      switch (p.init) {
        case ParamInit::uniform_fan_in: {
          const double bound = std::sqrt(6.0 / p.fan_in);
          std::uniform_real_distribution<double> dist(-bound, bound);
          for (T& v : *p.value) v = static_cast<T>(dist(rng));
          break;
        }
        case ParamInit::zeros:
          std::fill(p.value->begin(), p.value->end(), T(0));
          break;
        case ParamInit::ones:
          std::fill(p.value->begin(), p.value->end(), T(1));
          break;
      }
    }
    for (T& v : adv.weight.data) v = static_cast<T>(v * 0.01);
    std::fill(adv.bias.begin(), adv.bias.end(), T(0.5));
  }

  ParamCounts count_params() const {
    ParamCounts c;
    c.frontend = Frontend<T>::param_count();
    c.fused_vgg = 0;
    for (const auto& conv : convs) c.fused_vgg += conv.param_count() + kVggChannels;  // fused bias
    c.fused_vgg += proj.param_count();
    c.lin = lin.param_count();
    c.sof = sof.param_count();
    c.adv = adv.param_count();
    c.fused_total = c.frontend + c.fused_vgg + c.lin + c.sof + c.adv;
    c.trainable_unfused = c.lin + c.sof + c.adv + proj.param_count();
    for (const auto& conv : convs) c.trainable_unfused += conv.param_count();
    for (const auto& bn : bns) c.trainable_unfused += bn.param_count();
    return c;
  }

  // Forward multiply-accumulate count for one waveform of the given length.
  std::int64_t count_macs(std::int64_t samples) const {
    const int frames = num_frames(samples);
    const int tokens = tokens_for_frames(frames);
    std::int64_t macs = 0;
    macs += static_cast<std::int64_t>(frames) * 64 * (2 * kNumBins);      // windowed DFT
    macs += static_cast<std::int64_t>(frames) * kNumBins * kNumMels;      // filterbank
    auto conv_macs = [](std::int64_t h, std::int64_t w, std::int64_t ic, std::int64_t oc,
                        std::int64_t k) { return h * w * ic * oc * k * k; };
    macs += conv_macs(frames, kNumMels, 1, kVggChannels, 3);
    macs += 2 * conv_macs(frames, kNumMels, kVggChannels, kVggChannels, 3);
    macs += 4 * conv_macs(tokens, kVggChannels, kVggChannels, kVggChannels, 3);
    macs += conv_macs(tokens, kVggChannels, kVggChannels, kVggChannels, 1);
    macs += 2LL * tokens * kTokenDim * kTokenDim;  // lin and sof
    macs += static_cast<std::int64_t>(kTokenDim) * kNumOutputs;
    return macs;
  }

  Frontend<T> frontend;
  std::vector<Conv2d<T>> convs;  // seven 3x3 convs, bias-free
  std::vector<BatchNorm2d<T>> bns;
  Conv2d<T> proj;  // 1x1, biased
  Linear<T> lin, sof, adv;
};
using Wav2Small = Wav2SmallT<float>;

// Inference-only network with batchnorm folded into the convolutions.
template <typename T>
class FusedModelT {
 public:
  explicit FusedModelT(const Wav2SmallT<T>& m)
      : frontend(m.frontend), proj(m.proj), lin(m.lin), sof(m.sof), adv(m.adv) {
    convs.reserve(7);
    for (int i = 0; i < 7; ++i)
      convs.push_back(fuse_conv_bn(m.convs[static_cast<std::size_t>(i)],
                                   m.bns[static_cast<std::size_t>(i)]));
  }

  // Builds an empty shell for deserialization.
  FusedModelT()
      : proj(kVggChannels, kVggChannels, 1, 0, true),
        lin(kTokenDim, kTokenDim), sof(kTokenDim, kTokenDim), adv(kTokenDim, kNumOutputs) {
    convs.emplace_back(1, kVggChannels, 3, 1, true);
    for (int i = 1; i < 7; ++i) convs.emplace_back(kVggChannels, kVggChannels, 3, 1, true);
  }

  Tensor4<T> vgg(const Tensor4<T>& logmel) const {
    Tensor4<T> x = logmel;
    for (int i = 0; i < 7; ++i) {
      x = relu(convs[i].forward(x));
      if (i == 2) x = maxpool_3x3_s2(x);
    }
    return proj.forward(x);
  }

  AdvTripleT<T> head(const Tensor4<T>& tokens) const {
    const Tensor4<T> attn = softmax_height(sof.forward(tokens));
    const Tensor4<T> pooled = sum_height(multiply(attn, lin.forward(tokens)));
    const Tensor4<T> out = adv.forward(pooled);
    return {out.data[0], out.data[1], out.data[2]};
  }

  AdvTripleT<T> forward(const Waveform& w) const {
    return head(Wav2SmallT<T>::to_tokens(vgg(frontend.compute(w))));
  }

  TokenMatrixT<T> forward_tokens(const Waveform& w) const {
    const Tensor4<T> tokens = Wav2SmallT<T>::to_tokens(vgg(frontend.compute(w)));
    TokenMatrixT<T> out;
    out.tokens = tokens.shape[2];
    out.values = tokens.data;
    return out;
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    for (int i = 0; i < 7; ++i) convs[static_cast<std::size_t>(i)].collect_params("conv" + std::to_string(i + 1), out);
    proj.collect_params("proj", out);
    lin.collect_params("lin", out);
    sof.collect_params("sof", out);
    adv.collect_params("adv", out);
    // Frontend matrices ride along so a weight file is self-contained.
    out.push_back({"frontend.dft_real", &frontend.dft_real(), nullptr,
                   {kNumBins, kNumFft}, ParamInit::zeros, 0, false});
    out.push_back({"frontend.dft_imag", &frontend.dft_imag(), nullptr,
                   {kNumBins, kNumFft}, ParamInit::zeros, 0, false});
    out.push_back({"frontend.mel", &frontend.mel_matrix(), nullptr,
                   {kNumBins, kNumMels}, ParamInit::zeros, 0, false});
    return out;
  }

  std::int64_t param_count_with_frontend() const {
    std::int64_t n = Frontend<T>::param_count();
    for (const auto& c : convs) n += c.param_count();
    n += proj.param_count() + lin.param_count() + sof.param_count() + adv.param_count();
    return n;
  }

  Frontend<T> frontend;
  std::vector<Conv2d<T>> convs;  // fused, biased
  Conv2d<T> proj;
  Linear<T> lin, sof, adv;
};
using FusedModel = FusedModelT<float>;

}  // namespace w2s
