#pragma once

#include "w2s/corpus.hpp"
#include "w2s/dsp.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <set>

namespace w2s {

// Band-drop operates on its own STFT grid, coarser than the model frontend:
// 129 bins grouped into 16 bands of 500 Hz (the last band keeps Nyquist).
inline constexpr int kBandFft = 256;
inline constexpr int kBandHop = 128;
inline constexpr int kBandBins = kBandFft / 2 + 1;
inline constexpr int kNumBands = 16;

struct AugmentationConfig {
  float mix_primary = 0.64f;
  float mix_secondary = 0.41f;
  int excerpt_min = 6400;    // 0.4 s
  int excerpt_max = 192000;  // 12 s
  float p_roll = 0.5f;
  float p_band_drop = 0.5f;
  float p_shout = 0.5f;
  int band_drop_min = 1;
  int band_drop_max = 4;
  float shout_intensity = 1.0f;
  std::array<float, 3> bucket_probs{1.0f / 3.0f, 1.0f / 3.0f, 1.0f / 3.0f};
  std::uint64_t seed = 0;
};

// Stream-independent generator for one sample: the same (seed, counter) pair
// yields the same draws no matter which worker runs it.
std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t counter);

// out = 0.64*a1 + 0.41*a2 at a1's length; a2 loops if shorter and is cropped
// at a random offset if longer. No clipping.
Waveform mixup(const Waveform& a1, const Waveform& a2, const AugmentationConfig& cfg,
               std::mt19937_64& rng);

Waveform cyclic_rotate(const Waveform& w, long long shift);

// Inclusive-exclusive bin range [first, last) of one band.
std::array<int, 2> band_bins(int band);

// Zeroes the selected bands in the STFT domain, resynthesizes by
// overlap-add, and rescales so total energy is preserved.
Waveform band_drop(const Waveform& w, const std::set<int>& bands);

// Gain plus soft-knee limiting plus a first-difference treble boost;
// intensity 0 returns the input untouched.
Waveform shout_proxy(const Waveform& w, float intensity);

// Full pipeline for sample number `counter`: excerpt, always-on mixup, then
// roll / band-drop / shout each with its configured probability.
Waveform make_training_sample(const CorpusBuckets& buckets, const AugmentationConfig& cfg,
                              std::uint64_t counter);

}  // namespace w2s
