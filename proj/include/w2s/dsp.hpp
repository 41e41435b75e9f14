#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "w2s/gemm.hpp"
#include "w2s/tensor.hpp"

namespace w2s {

inline constexpr int kSampleRate = 16000;
inline constexpr int kNumFft = 64;
inline constexpr int kHop = 32;
inline constexpr int kNumBins = 33;  // one-sided bins for fft=64
inline constexpr int kNumMels = 26;
inline constexpr int kMinSamples = 64;  // shorter inputs are out of contract

// Mono 16 kHz audio. Values are nominally [-1, 1] but may exceed it after
// augmentation.
struct Waveform {
  std::vector<float> samples;
  int sample_rate = kSampleRate;
};

// Triangular mel filterbank [33 x 26] on the HTK mel scale, no area
// normalization. Two guards keep the extreme fft=64 geometry usable: the
// last triangle's down-ramp ends one bin width past Nyquist so bin 32 gets
// weight, and a band whose triangle captures no bin receives weight 1 at
// the bin nearest its peak (affects the two lowest bands).
struct MelFilterbank {
  std::vector<double> weights;  // [bin * kNumMels + mel]

  double at(int bin, int mel) const { return weights[static_cast<std::size_t>(bin) * kNumMels + mel]; }
};

MelFilterbank make_mel_filterbank();

std::vector<double> hann_periodic_window(int n);
std::vector<double> rectangular_window(int n);

inline int num_frames(std::int64_t samples) { return static_cast<int>(samples / kHop) + 1; }

// Mean removal then division by sqrt(mean(x^2) + 1e-7), variance taken on the
// mean-removed signal.
template <typename T>
void normalize_samples(std::vector<T>& x) {
  if (x.empty()) throw std::invalid_argument("normalize: empty waveform");
  const std::size_t n = x.size();
  T mean = 0;
  for (T v : x) mean += v;
  mean /= static_cast<T>(n);
  T var = 0;
  for (T& v : x) {
    v -= mean;
    var += v * v;
  }
  var = var / static_cast<T>(n) + static_cast<T>(1e-7);
  const T inv = T(1) / std::sqrt(var);
  for (T& v : x) v *= inv;
}

Waveform normalize_waveform(const Waveform& w);

// Waveform -> LogMel pipeline with the STFT expressed as two fixed windowed
// DFT matrices [33 x 64] and the filterbank as a [33 x 26] matrix, so the
// whole frontend is serializable as parameters.
template <typename T>
class Frontend {
 public:
  Frontend() : Frontend(hann_periodic_window(kNumFft), make_mel_filterbank()) {}

  Frontend(const std::vector<double>& window, const MelFilterbank& fb) {
    dft_real_.resize(kNumBins * kNumFft);
    dft_imag_.resize(kNumBins * kNumFft);
    for (int k = 0; k < kNumBins; ++k) {
      for (int n = 0; n < kNumFft; ++n) {
        const double phase = 2.0 * M_PI * k * n / kNumFft;
        dft_real_[k * kNumFft + n] = static_cast<T>(std::cos(phase) * window[n]);
        dft_imag_[k * kNumFft + n] = static_cast<T>(-std::sin(phase) * window[n]);
      }
    }
    mel_fb_.resize(kNumBins * kNumMels);
    for (int k = 0; k < kNumBins; ++k)
      for (int m = 0; m < kNumMels; ++m) mel_fb_[k * kNumMels + m] = static_cast<T>(fb.at(k, m));
  }

  // One-sided power spectrum of Hann-windowed 64-sample frames, centered
  // framing with reflect padding. Returns [frames x 33] row-major.
  std::vector<T> stft_power(const std::vector<T>& samples, int* frames_out) const {
    Tensor4<T> power = stft_power_tensor(samples.data(),
                                         static_cast<std::int64_t>(samples.size()));
    if (frames_out) *frames_out = power.shape[2];
    return power.data;
  }

  // 10*log10(max(power . fb, amin)), amin = 1e-10. Input [frames x 33],
  // output [frames x 26].
  std::vector<T> apply_mel_log(const std::vector<T>& power, int frames) const {
    if (static_cast<std::size_t>(frames) * kNumBins != power.size())
      throw std::invalid_argument("apply_mel_log: power matrix is not [frames x 33]");
    Tensor4<T> p(1, 1, frames, kNumBins);
    std::copy(power.begin(), power.end(), p.data.begin());
    return mel_log_tensor(p).data;
  }

  // Full pipeline: normalize -> stft_power -> mel+log. Output (1,1,frames,26).
  Tensor4<T> compute(const Waveform& w) const {
    if (w.sample_rate != kSampleRate)
      throw std::invalid_argument("frontend: sample rate must be 16000");
    if (static_cast<int>(w.samples.size()) < kMinSamples)
      throw std::invalid_argument("frontend: waveform shorter than 64 samples");
    Tensor4<T> power;
    {
      Tensor4<T> x(1, 1, 1, static_cast<int>(w.samples.size()));
      std::copy(w.samples.begin(), w.samples.end(), x.data.begin());
      normalize_samples(x.data);
      power = stft_power_tensor(x.data.data(), x.numel());
    }
    return mel_log_tensor(power);
  }

  static constexpr double kLogFloor = 1e-10;

  const std::vector<T>& dft_real() const { return dft_real_; }
  const std::vector<T>& dft_imag() const { return dft_imag_; }
  const std::vector<T>& mel_matrix() const { return mel_fb_; }

  std::vector<T>& dft_real() { return dft_real_; }
  std::vector<T>& dft_imag() { return dft_imag_; }
  std::vector<T>& mel_matrix() { return mel_fb_; }

  static constexpr int param_count() {
    return 2 * kNumBins * kNumFft + kNumBins * kNumMels;  // 5082
  }

 private:
  std::vector<T> dft_real_;  // [33 x 64], window folded in
  std::vector<T> dft_imag_;
  std::vector<T> mel_fb_;  // [33 x 26]

  Tensor4<T> stft_power_tensor(const T* samples, std::int64_t len) const {
    if (len < kMinSamples)
      throw std::invalid_argument("stft: waveform shorter than " + std::to_string(kMinSamples) +
                                  " samples");
    const int frames = num_frames(len);
    const int pad = kNumFft / 2;

    Tensor4<T> power(1, 1, frames, kNumBins);
    {
      // Gather windowless frames from the reflect-padded signal.
      Tensor4<T> frame_mat(1, 1, frames, kNumFft);
      for (int t = 0; t < frames; ++t) {
        T* row = frame_mat.data.data() + static_cast<std::size_t>(t) * kNumFft;
        const std::int64_t start = static_cast<std::int64_t>(t) * kHop - pad;
        for (int n = 0; n < kNumFft; ++n) {
          std::int64_t j = start + n;
          if (j < 0) j = -j;
          if (j >= len) j = 2 * len - 2 - j;
          row[n] = samples[static_cast<std::size_t>(j)];
        }
      }

      Tensor4<T> re(1, 1, frames, kNumBins);
      Tensor4<T> im(1, 1, frames, kNumBins);
      gemm<T>(false, true, frames, kNumBins, kNumFft, T(1), frame_mat.data.data(), kNumFft,
              dft_real_.data(), kNumFft, T(0), re.data.data(), kNumBins);
      gemm<T>(false, true, frames, kNumBins, kNumFft, T(1), frame_mat.data.data(), kNumFft,
              dft_imag_.data(), kNumFft, T(0), im.data.data(), kNumBins);
      for (std::size_t i = 0; i < power.data.size(); ++i)
        power.data[i] = re.data[i] * re.data[i] + im.data[i] * im.data[i];
    }
    return power;
  }

  Tensor4<T> mel_log_tensor(const Tensor4<T>& power) const {
    const int frames = power.shape[2];
    Tensor4<T> mel(1, 1, frames, kNumMels);
    gemm<T>(false, false, frames, kNumMels, kNumBins, T(1), power.data.data(), kNumBins,
            mel_fb_.data(), kNumMels, T(0), mel.data.data(), kNumMels);
    const T amin = static_cast<T>(kLogFloor);
    for (T& v : mel.data) v = T(10) * std::log10(std::max(v, amin));
    return mel;
  }
};

}  // namespace w2s
