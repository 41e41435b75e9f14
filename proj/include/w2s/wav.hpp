#pragma once

#include "w2s/dsp.hpp"

#include <stdexcept>
#include <string>

namespace w2s {

struct WavError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Accepts RIFF/WAVE, mono, 16 kHz, PCM16 or float32. PCM16 samples are scaled
// by 1/32768; float32 passes through bit-exact. Anything else is rejected with
// a message naming the offending property.
Waveform read_wav(const std::string& path);

void write_wav_float32(const std::string& path, const Waveform& w);
void write_wav_pcm16(const std::string& path, const Waveform& w);

}  // namespace w2s
