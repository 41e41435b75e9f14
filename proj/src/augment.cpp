#include "w2s/augment.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace w2s {

namespace {

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const int n = static_cast<int>(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * M_PI / len * (inverse ? 1.0 : -1.0);
    const std::complex<double> step(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int j = 0; j < len / 2; ++j) {
        const auto u = a[static_cast<std::size_t>(i + j)];
        const auto v = a[static_cast<std::size_t>(i + j + len / 2)] * w;
        a[static_cast<std::size_t>(i + j)] = u + v;
        a[static_cast<std::size_t>(i + j + len / 2)] = u - v;
        w *= step;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= n;
}

}  // namespace

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return std::mt19937_64(z);
}

Waveform mixup(const Waveform& a1, const Waveform& a2, const AugmentationConfig& cfg,
               std::mt19937_64& rng) {
  if (a1.samples.empty() || a2.samples.empty())
    throw std::invalid_argument("mixup: empty input");
  if (a1.sample_rate != kSampleRate || a2.sample_rate != kSampleRate)
    throw std::invalid_argument("mixup: expected 16000 Hz inputs");
  const std::size_t n = a1.samples.size();
  const std::size_t m = a2.samples.size();
  std::size_t offset = 0;
  if (m > n) offset = std::uniform_int_distribution<std::size_t>(0, m - n)(rng);
  Waveform out;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.samples[i] =
        cfg.mix_primary * a1.samples[i] + cfg.mix_secondary * a2.samples[(offset + i) % m];
  return out;
}

Waveform cyclic_rotate(const Waveform& w, long long shift) {
  Waveform out = w;
  const long long n = static_cast<long long>(w.samples.size());
  if (n == 0) return out;
  const long long s = ((shift % n) + n) % n;
  for (long long i = 0; i < n; ++i)
    out.samples[static_cast<std::size_t>((i + s) % n)] = w.samples[static_cast<std::size_t>(i)];
  return out;
}

std::array<int, 2> band_bins(int band) {
  if (band < 0 || band >= kNumBands) throw std::invalid_argument("band_bins: band out of range");
  const int width = kBandBins / kNumBands;  // 8 bins; the last band absorbs the remainder
  const int first = band * width;
  const int last = (band == kNumBands - 1) ? kBandBins : first + width;
  return {first, last};
}

Waveform band_drop(const Waveform& w, const std::set<int>& bands) {
  if (w.samples.empty()) throw std::invalid_argument("band_drop: empty input");
  for (int b : bands)
    if (b < 0 || b >= kNumBands) throw std::invalid_argument("band_drop: band out of range");
  if (static_cast<int>(bands.size()) == kNumBands)
    throw std::invalid_argument("band_drop: dropping every band leaves no signal");

  std::vector<bool> drop(kBandBins, false);
  for (int b : bands) {
    const auto [first, last] = band_bins(b);
    for (int k = first; k < last; ++k) drop[static_cast<std::size_t>(k)] = true;
  }

  const std::size_t len = w.samples.size();
  const std::size_t pad_front = kBandHop;
  std::size_t padded = pad_front + len + kBandFft;
  if ((padded - kBandFft) % kBandHop != 0)
    padded += kBandHop - (padded - kBandFft) % kBandHop;
  const std::size_t frames = (padded - kBandFft) / kBandHop + 1;

  std::vector<double> input(padded, 0.0);
  for (std::size_t i = 0; i < len; ++i) input[pad_front + i] = w.samples[i];

  // Periodic Hann at 50% overlap sums to exactly one, so overlap-adding the
  // analysis frames reconstructs the signal without a synthesis window.
  const std::vector<double> window = hann_periodic_window(kBandFft);

  std::vector<double> output(padded, 0.0);
  std::vector<std::complex<double>> spec(kBandFft);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * kBandHop;
    for (int i = 0; i < kBandFft; ++i)
      spec[static_cast<std::size_t>(i)] = {window[static_cast<std::size_t>(i)] * input[start + static_cast<std::size_t>(i)], 0.0};
    fft_radix2(spec, false);
    for (int k = 0; k < kBandFft; ++k) {
      const int pos = k <= kBandFft / 2 ? k : kBandFft - k;
      if (drop[static_cast<std::size_t>(pos)]) spec[static_cast<std::size_t>(k)] = {0.0, 0.0};
    }
    fft_radix2(spec, true);
    for (int i = 0; i < kBandFft; ++i)
      output[start + static_cast<std::size_t>(i)] += spec[static_cast<std::size_t>(i)].real();
  }

  // Per-frame zeroing followed by overlap-add loses a little energy to frame
  // inconsistency, so the survivors are rescaled after reconstruction, where
  // total energy can be matched exactly. Skipped when almost nothing survives:
  // amplifying leakage residue would lift the dropped bands back above the
  // attenuation floor.
  double energy_in = 0.0, energy_out = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    energy_in += static_cast<double>(w.samples[i]) * w.samples[i];
    const double v = output[pad_front + i];
    energy_out += v * v;
  }
  const double scale = energy_out > energy_in * 1e-4 ? std::sqrt(energy_in / energy_out) : 1.0;

  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i)
    out.samples[i] = static_cast<float>(output[pad_front + i] * scale);
  return out;
}

Waveform shout_proxy(const Waveform& w, float intensity) {
  if (intensity == 0.0f) return w;
  const float knee = 1.5f;
  const float gain = 1.0f + 2.0f * intensity;
  const float tilt = 0.4f * intensity;
  Waveform out = w;
  float prev = w.samples.empty() ? 0.0f : w.samples[0];
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const float x = w.samples[i];
    const float boosted = x + tilt * (x - prev);
    prev = x;
    out.samples[i] = knee * std::tanh(gain * boosted / knee);
  }
  return out;
}

Waveform make_training_sample(const CorpusBuckets& buckets, const AugmentationConfig& cfg,
                              std::uint64_t counter) {
  buckets.validate();
  if (cfg.excerpt_min < kMinSamples || cfg.excerpt_max < cfg.excerpt_min)
    throw std::invalid_argument("make_training_sample: bad excerpt range");
  if (cfg.band_drop_min < 1 || cfg.band_drop_max < cfg.band_drop_min ||
      cfg.band_drop_max >= kNumBands)
    throw std::invalid_argument("make_training_sample: bad band-drop count range");
  std::mt19937_64 rng = sample_rng(cfg.seed, counter);

  const int len = std::uniform_int_distribution<int>(cfg.excerpt_min, cfg.excerpt_max)(rng);
  const Waveform& track = buckets.primary[std::uniform_int_distribution<std::size_t>(
      0, buckets.primary.size() - 1)(rng)];
  const std::size_t offset =
      std::uniform_int_distribution<std::size_t>(0, track.samples.size() - 1)(rng);
  Waveform excerpt;
  excerpt.samples.resize(static_cast<std::size_t>(len));
  for (std::size_t i = 0; i < excerpt.samples.size(); ++i)
    excerpt.samples[i] = track.samples[(offset + i) % track.samples.size()];

  const double pick = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const double total = cfg.bucket_probs[0] + cfg.bucket_probs[1] + cfg.bucket_probs[2];
  int bucket = 2;
  if (pick * total < cfg.bucket_probs[0])
    bucket = 0;
  else if (pick * total < cfg.bucket_probs[0] + cfg.bucket_probs[1])
    bucket = 1;
  const auto& pool = buckets.secondary(bucket);
  const Waveform& voice =
      pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];

  Waveform sample = mixup(excerpt, voice, cfg, rng);

  std::uniform_real_distribution<float> coin(0.0f, 1.0f);
  if (coin(rng) < cfg.p_roll) {
    const long long shift = std::uniform_int_distribution<long long>(0, len - 1)(rng);
    sample = cyclic_rotate(sample, shift);
  }
  if (coin(rng) < cfg.p_band_drop) {
    const int count =
        std::uniform_int_distribution<int>(cfg.band_drop_min, cfg.band_drop_max)(rng);
    std::set<int> bands;
    std::uniform_int_distribution<int> pick_band(0, kNumBands - 1);
    while (static_cast<int>(bands.size()) < count) bands.insert(pick_band(rng));
    sample = band_drop(sample, bands);
  }
  if (coin(rng) < cfg.p_shout) sample = shout_proxy(sample, cfg.shout_intensity);
  return sample;
}

}  // namespace w2s
