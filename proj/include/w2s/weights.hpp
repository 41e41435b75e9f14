#pragma once

#include "w2s/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace w2s {

struct WeightError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CrcError : WeightError {
  using WeightError::WeightError;
};
struct VersionError : WeightError {
  using WeightError::WeightError;
};
struct UnknownRecordError : WeightError {
  using WeightError::WeightError;
};
struct ShapeError : WeightError {
  using WeightError::WeightError;
};

enum class WeightDtype : std::uint8_t { kF32 = 0, kI8 = 1 };

struct WeightRecord {
  std::string name;
  WeightDtype dtype = WeightDtype::kF32;
  float scale = 1.0f;  // i8 only
  std::vector<std::uint32_t> dims;
  std::vector<float> f32;
  std::vector<std::int8_t> i8;

  std::size_t element_count() const;
  // i8 records expand to scale * q; f32 records return their payload.
  std::vector<float> dequantized() const;
};

// Layout, all little-endian: magic "W2S1", version u16, record count u32,
// flags u16 (bit 0 fused, bit 1 quantized); per record: name length u16, name
// bytes, dtype u8, scale f32 (i8 records only), ndim u8, dims u32 each,
// payload; trailing CRC32 (IEEE) of every preceding byte.
struct WeightFile {
  std::uint16_t version = 1;
  bool fused = false;
  bool quantized = false;
  std::vector<WeightRecord> records;
};

std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t size);

std::vector<std::uint8_t> encode_weight_file(const WeightFile& wf);
WeightFile decode_weight_file(const std::vector<std::uint8_t>& bytes);

void write_weight_file(const WeightFile& wf, const std::string& path);
WeightFile read_weight_file(const std::string& path);

WeightFile pack_student(Wav2Small& model);
WeightFile pack_fused(FusedModel& model);

// Per-record symmetric int8: scale = max|w| / 127, values rounded and clamped
// to [-127, 127]; an all-zero record keeps scale 1.0. Frontend matrices are
// quantized like everything else.
WeightFile quantize_weights(FusedModel& model);

Wav2Small unpack_student(const WeightFile& wf);
FusedModel unpack_fused(const WeightFile& wf);

void save_student(Wav2Small& model, const std::string& path);
void save_fused(FusedModel& model, const std::string& path);
Wav2Small load_student(const std::string& path);
FusedModel load_fused(const std::string& path);

// Dispatches on the file's fused flag so callers can run whichever form a
// weight file holds.
struct LoadedModel {
  bool fused = false;
  Wav2Small student;
  FusedModel fused_net;

  AdvTriple infer(const Waveform& w) const;
  TokenMatrix tokens(const Waveform& w) const;
};

LoadedModel load_model(const std::string& path);

}  // namespace w2s
