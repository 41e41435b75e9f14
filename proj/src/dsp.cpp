#include "w2s/dsp.hpp"

#include <cmath>

namespace w2s {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

std::vector<double> hann_periodic_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
  return w;
}

std::vector<double> rectangular_window(int n) {
  return std::vector<double>(static_cast<std::size_t>(n), 1.0);
}

MelFilterbank make_mel_filterbank() {
  const double nyquist = kSampleRate / 2.0;
  const double bin_width = static_cast<double>(kSampleRate) / kNumFft;

  // 28 points equally spaced on the mel scale over [0, nyquist]; band m is
  // the triangle (f[m], f[m+1], f[m+2]).
  const int points = kNumMels + 2;
  std::vector<double> freq(points);
  const double mel_max = hz_to_mel(nyquist);
  for (int i = 0; i < points; ++i) freq[i] = mel_to_hz(mel_max * i / (points - 1));

  MelFilterbank fb;
  fb.weights.assign(static_cast<std::size_t>(kNumBins) * kNumMels, 0.0);
  for (int m = 0; m < kNumMels; ++m) {
    const double left = freq[m];
    const double peak = freq[m + 1];
    // Ending the last down-ramp a bin width past Nyquist keeps bin 32 covered.
    const double right = (m == kNumMels - 1) ? freq[m + 2] + bin_width : freq[m + 2];
    bool empty = true;
    for (int k = 0; k < kNumBins; ++k) {
      const double f = k * bin_width;
      double w = 0.0;
      if (f > left && f < right)
        w = (f <= peak) ? (f - left) / (peak - left) : (right - f) / (right - peak);
      if (w > 0.0) {
        fb.weights[static_cast<std::size_t>(k) * kNumMels + m] = w;
        empty = false;
      }
    }
    if (empty) {
      // Sub-bin-width triangle: pin the band to the bin nearest its peak.
      const int k = std::min(kNumBins - 1, static_cast<int>(std::lround(peak / bin_width)));
      fb.weights[static_cast<std::size_t>(k) * kNumMels + m] = 1.0;
    }
  }
  return fb;
}

Waveform normalize_waveform(const Waveform& w) {
  Waveform out = w;
  normalize_samples(out.samples);
  return out;
}

}  // namespace w2s
