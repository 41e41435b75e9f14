#include "w2s/corpus.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace w2s {

namespace {

constexpr double kTau = 2.0 * M_PI;

struct Tone {
  double freq = 440.0;
  double amp = 0.1;
  double phase = 0.0;
  double am_rate = 0.0;   // Hz; 0 disables the envelope
  double am_depth = 0.0;  // 0..1
};

void add_tone(std::vector<float>& out, const Tone& t) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double time = static_cast<double>(i) / kSampleRate;
    double env = 1.0;
    if (t.am_rate > 0.0)
      env = 1.0 - t.am_depth * 0.5 * (1.0 - std::cos(kTau * t.am_rate * time));
    out[i] += static_cast<float>(t.amp * env * std::sin(kTau * t.freq * time + t.phase));
  }
}

// Linear sweep from f0 to f1 across [start, start+len).
void add_chirp(std::vector<float>& out, std::size_t start, std::size_t len, double f0, double f1,
               double amp) {
  for (std::size_t i = 0; i < len && start + i < out.size(); ++i) {
    const double time = static_cast<double>(i) / kSampleRate;
    const double span = static_cast<double>(len) / kSampleRate;
    const double fade = std::sin(M_PI * time / span);
    const double angle = kTau * (f0 * time + 0.5 * (f1 - f0) * time * time / span);
    out[start + i] += static_cast<float>(amp * fade * std::sin(angle));
  }
}

// One-pole low-passed white noise bed.
void add_noise(std::vector<float>& out, std::mt19937_64& rng, double amp, double smooth) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double state = 0.0;
  for (auto& s : out) {
    state += smooth * (u(rng) - state);
    s += static_cast<float>(amp * state);
  }
}

// Slow loudness contour so different excerpts of one track differ in energy.
void apply_contour(std::vector<float>& out, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> rate(0.05, 0.35);
  std::uniform_real_distribution<double> depth(0.2, 0.7);
  std::uniform_real_distribution<double> phase(0.0, kTau);
  const double r = rate(rng), d = depth(rng), p = phase(rng);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double time = static_cast<double>(i) / kSampleRate;
    out[i] *= static_cast<float>(1.0 - d * 0.5 * (1.0 - std::cos(kTau * r * time + p)));
  }
}

Waveform primary_track(std::mt19937_64& rng) {
  Waveform w;
  w.samples.assign(14 * kSampleRate, 0.0f);
  std::uniform_int_distribution<int> n_tones(2, 4);
  std::uniform_real_distribution<double> logf(std::log(80.0), std::log(4000.0));
  std::uniform_real_distribution<double> amp(0.08, 0.3);
  std::uniform_real_distribution<double> phase(0.0, kTau);
  std::uniform_real_distribution<double> am_rate(0.1, 1.2);
  std::uniform_real_distribution<double> am_depth(0.3, 1.0);
  const int tones = n_tones(rng);
  for (int t = 0; t < tones; ++t)
    add_tone(w.samples, {std::exp(logf(rng)), amp(rng), phase(rng), am_rate(rng), am_depth(rng)});
  std::uniform_int_distribution<int> n_chirps(0, 2);
  std::uniform_real_distribution<double> cf(100.0, 5000.0);
  std::uniform_real_distribution<double> clen(1.0, 4.0);
  const int chirps = n_chirps(rng);
  for (int c = 0; c < chirps; ++c) {
    const std::size_t len = static_cast<std::size_t>(clen(rng) * kSampleRate);
    std::uniform_int_distribution<std::size_t> start(0, w.samples.size() - len);
    add_chirp(w.samples, start(rng), len, cf(rng), cf(rng), 0.1 + 0.1 * am_depth(rng));
  }
  std::uniform_real_distribution<double> namp(0.02, 0.12);
  std::uniform_real_distribution<double> smooth(0.05, 0.6);
  add_noise(w.samples, rng, namp(rng), smooth(rng));
  apply_contour(w.samples, rng);
  return w;
}

Waveform general_track(std::mt19937_64& rng) {
  Waveform w;
  std::uniform_int_distribution<int> secs(6, 10);
  w.samples.assign(static_cast<std::size_t>(secs(rng)) * kSampleRate, 0.0f);
  std::uniform_real_distribution<double> cf(100.0, 6000.0);
  std::uniform_real_distribution<double> clen(0.5, 2.5);
  std::uniform_int_distribution<int> n_events(3, 7);
  const int events = n_events(rng);
  for (int e = 0; e < events; ++e) {
    const std::size_t len = static_cast<std::size_t>(clen(rng) * kSampleRate);
    if (len >= w.samples.size()) continue;
    std::uniform_int_distribution<std::size_t> start(0, w.samples.size() - len);
    add_chirp(w.samples, start(rng), len, cf(rng), cf(rng), 0.25);
  }
  std::uniform_real_distribution<double> burst_rate(2.0, 8.0);
  add_tone(w.samples, {cf(rng), 0.15, 0.0, burst_rate(rng), 1.0});
  add_noise(w.samples, rng, 0.03, 0.3);
  return w;
}

Waveform speech_track(std::mt19937_64& rng) {
  Waveform w;
  std::uniform_int_distribution<int> secs(6, 10);
  w.samples.assign(static_cast<std::size_t>(secs(rng)) * kSampleRate, 0.0f);
  std::uniform_real_distribution<double> logf(std::log(300.0), std::log(3000.0));
  std::uniform_real_distribution<double> phase(0.0, kTau);
  std::uniform_real_distribution<double> syllable(3.5, 7.0);
  const double rate = syllable(rng);
  for (int t = 0; t < 12; ++t)
    add_tone(w.samples, {std::exp(logf(rng)), 0.045, phase(rng), rate, 0.85});
  add_noise(w.samples, rng, 0.02, 0.5);
  return w;
}

Waveform ambient_track(std::mt19937_64& rng) {
  Waveform w;
  std::uniform_int_distribution<int> secs(6, 10);
  w.samples.assign(static_cast<std::size_t>(secs(rng)) * kSampleRate, 0.0f);
  std::uniform_real_distribution<double> smooth(0.01, 0.06);
  std::uniform_real_distribution<double> amp(0.05, 0.2);
  add_noise(w.samples, rng, amp(rng), smooth(rng));
  std::uniform_real_distribution<double> hum(50.0, 120.0);
  add_tone(w.samples, {hum(rng), 0.03, 0.0, 0.0, 0.0});
  return w;
}

}  // namespace

void CorpusBuckets::validate() const {
  if (primary.empty() || general.empty() || speech.empty() || ambient.empty())
    throw std::invalid_argument("corpus: every bucket must be non-empty");
  for (const auto* bucket : {&primary, &general, &speech, &ambient})
    for (const Waveform& w : *bucket)
      if (w.samples.empty()) throw std::invalid_argument("corpus: empty track");
}

const std::vector<Waveform>& CorpusBuckets::secondary(int bucket) const {
  switch (bucket) {
    case 0: return general;
    case 1: return speech;
    case 2: return ambient;
    default: throw std::invalid_argument("corpus: secondary bucket index out of range");
  }
}

CorpusBuckets make_desk_corpus(std::uint64_t seed) {
  CorpusBuckets c;
  for (int i = 0; i < 24; ++i) {
    std::mt19937_64 rng(seed * 1000003 + 11 + static_cast<std::uint64_t>(i));
    c.primary.push_back(primary_track(rng));
  }
  for (int i = 0; i < 8; ++i) {
    std::mt19937_64 rng(seed * 1000003 + 2011 + static_cast<std::uint64_t>(i));
    c.general.push_back(general_track(rng));
  }
  for (int i = 0; i < 8; ++i) {
    std::mt19937_64 rng(seed * 1000003 + 4011 + static_cast<std::uint64_t>(i));
    c.speech.push_back(speech_track(rng));
  }
  for (int i = 0; i < 8; ++i) {
    std::mt19937_64 rng(seed * 1000003 + 8011 + static_cast<std::uint64_t>(i));
    c.ambient.push_back(ambient_track(rng));
  }
  return c;
}

std::vector<Waveform> calibration_excerpts(const CorpusBuckets& buckets, int count, int length) {
  buckets.validate();
  if (count < 1 || length < kMinSamples)
    throw std::invalid_argument("calibration_excerpts: need count >= 1 and length >= 64");
  std::vector<Waveform> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const Waveform& track = buckets.primary[static_cast<std::size_t>(i) % buckets.primary.size()];
    const std::size_t offset = (static_cast<std::size_t>(i) * 7919u * 997u) % track.samples.size();
    Waveform w;
    w.samples.resize(static_cast<std::size_t>(length));
    for (std::size_t j = 0; j < w.samples.size(); ++j)
      w.samples[j] = track.samples[(offset + j) % track.samples.size()];
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace w2s
