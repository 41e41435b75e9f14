#include "w2s/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace w2s {

static_assert(std::endian::native == std::endian::little,
              "wav codec assumes a little-endian host");

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(path + ": cannot open file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

std::uint16_t u16_at(const std::vector<std::uint8_t>& b, std::size_t pos) {
  return static_cast<std::uint16_t>(b[pos] | (b[pos + 1] << 8));
}

std::uint32_t u32_at(const std::vector<std::uint8_t>& b, std::size_t pos) {
  return static_cast<std::uint32_t>(b[pos]) | (static_cast<std::uint32_t>(b[pos + 1]) << 8) |
         (static_cast<std::uint32_t>(b[pos + 2]) << 16) |
         (static_cast<std::uint32_t>(b[pos + 3]) << 24);
}

void append_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v & 0xff));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

void append_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void append_tag(std::vector<std::uint8_t>& b, const char* tag) {
  b.insert(b.end(), tag, tag + 4);
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WavError(path + ": cannot open file for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WavError(path + ": write failed");
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

}  // namespace

Waveform read_wav(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw WavError(path + ": not a RIFF/WAVE file");

  FmtChunk fmt;
  bool have_fmt = false;
  std::size_t data_pos = 0, data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t size = u32_at(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw WavError(path + ": truncated chunk");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (size < 16) throw WavError(path + ": fmt chunk too small");
      fmt.format = u16_at(bytes, body);
      fmt.channels = u16_at(bytes, body + 2);
      fmt.sample_rate = u32_at(bytes, body + 4);
      fmt.block_align = u16_at(bytes, body + 12);
      fmt.bits = u16_at(bytes, body + 14);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data_pos = body;
      data_size = size;
      have_data = true;
    }
    pos = body + size + (size % 2);
  }

  if (!have_fmt) throw WavError(path + ": missing fmt chunk");
  if (!have_data) throw WavError(path + ": missing data chunk");
  if (fmt.channels != 1)
    throw WavError(path + ": expected mono, got " + std::to_string(fmt.channels) + " channels");
  if (fmt.sample_rate != static_cast<std::uint32_t>(kSampleRate))
    throw WavError(path + ": expected 16000 Hz sample rate, got " +
                   std::to_string(fmt.sample_rate));
  if (fmt.format == kFormatPcm) {
    if (fmt.bits != 16)
      throw WavError(path + ": expected 16-bit PCM, got " + std::to_string(fmt.bits) + "-bit");
  } else if (fmt.format == kFormatFloat) {
    if (fmt.bits != 32)
      throw WavError(path + ": expected 32-bit float, got " + std::to_string(fmt.bits) + "-bit");
  } else {
    throw WavError(path + ": unsupported codec (format tag " + std::to_string(fmt.format) + ")");
  }

  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t count = data_size / bytes_per_sample;
  Waveform w;
  w.sample_rate = kSampleRate;
  w.samples.resize(count);
  if (fmt.format == kFormatPcm) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint16_t raw = u16_at(bytes, data_pos + 2 * i);
      const std::int16_t s = static_cast<std::int16_t>(raw);
      w.samples[i] = static_cast<float>(s) / 32768.0f;
    }
  } else {
    std::memcpy(w.samples.data(), bytes.data() + data_pos, count * 4);
  }
  return w;
}

void write_wav_float32(const std::string& path, const Waveform& w) {
  const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
  std::vector<std::uint8_t> b;
  b.reserve(58 + 4 * n);
  append_tag(b, "RIFF");
  append_u32(b, 50 + 4 * n);
  append_tag(b, "WAVE");
  append_tag(b, "fmt ");
  append_u32(b, 16);
  append_u16(b, kFormatFloat);
  append_u16(b, 1);
  append_u32(b, static_cast<std::uint32_t>(w.sample_rate));
  append_u32(b, static_cast<std::uint32_t>(w.sample_rate) * 4);
  append_u16(b, 4);
  append_u16(b, 32);
  append_tag(b, "fact");
  append_u32(b, 4);
  append_u32(b, n);
  append_tag(b, "data");
  append_u32(b, 4 * n);
  const std::size_t start = b.size();
  b.resize(start + 4 * n);
  std::memcpy(b.data() + start, w.samples.data(), 4 * n);
  write_file(path, b);
}

void write_wav_pcm16(const std::string& path, const Waveform& w) {
  const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
  std::vector<std::uint8_t> b;
  b.reserve(44 + 2 * n);
  append_tag(b, "RIFF");
  append_u32(b, 36 + 2 * n);
  append_tag(b, "WAVE");
  append_tag(b, "fmt ");
  append_u32(b, 16);
  append_u16(b, kFormatPcm);
  append_u16(b, 1);
  append_u32(b, static_cast<std::uint32_t>(w.sample_rate));
  append_u32(b, static_cast<std::uint32_t>(w.sample_rate) * 2);
  append_u16(b, 2);
  append_u16(b, 16);
  append_tag(b, "data");
  append_u32(b, 2 * n);
  for (float s : w.samples) {
    const float scaled = std::clamp(s, -1.0f, 1.0f) * 32768.0f;
    const int v = std::clamp(static_cast<int>(std::lrintf(scaled)), -32768, 32767);
    append_u16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  write_file(path, b);
}

}  // namespace w2s
