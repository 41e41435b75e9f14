#pragma once

#include "w2s/dsp.hpp"

#include <cstdint>
#include <vector>

namespace w2s {

// Training audio sources: a primary bucket of long-form tracks plus three
// secondary buckets mixed in as the second mixup voice.
struct CorpusBuckets {
  std::vector<Waveform> primary;
  std::vector<Waveform> general;  // chirps, tone bursts
  std::vector<Waveform> speech;   // band-limited amplitude-modulated voices
  std::vector<Waveform> ambient;  // low-passed background beds

  void validate() const;
  const std::vector<Waveform>& secondary(int bucket) const;
};

// Deterministic generated corpus for machines without real audio folders.
CorpusBuckets make_desk_corpus(std::uint64_t seed);

// Fixed clean slices of the primary bucket, used to calibrate synthetic
// teachers onto a known output range.
std::vector<Waveform> calibration_excerpts(const CorpusBuckets& buckets, int count, int length);

}  // namespace w2s
