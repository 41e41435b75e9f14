#include "w2s/weights.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace w2s {

static_assert(std::endian::native == std::endian::little,
              "weight codec assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'W', '2', 'S', '1'};
constexpr std::uint16_t kFormatVersion = 1;
constexpr std::uint16_t kFlagFused = 1;
constexpr std::uint16_t kFlagQuantized = 2;

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

void append_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v & 0xff));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

void append_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void append_f32(std::vector<std::uint8_t>& b, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  append_u32(b, bits);
}

struct Cursor {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;
  std::size_t limit = 0;

  void need(std::size_t n) const {
    if (pos + n > limit) throw WeightError("malformed weight file: record overruns the payload");
  }
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

std::string dims_string(const std::vector<std::uint32_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

template <typename Model>
WeightFile pack_model(Model& model, bool fused) {
  WeightFile wf;
  wf.fused = fused;
  for (auto& p : model.params()) {
    WeightRecord r;
    r.name = p.name;
    r.dtype = WeightDtype::kF32;
    r.dims = p.dims;
    r.f32 = *p.value;
    wf.records.push_back(std::move(r));
  }
  return wf;
}

template <typename Model>
Model unpack_model(const WeightFile& wf) {
  Model model;
  std::map<std::string, const WeightRecord*> by_name;
  for (const auto& r : wf.records) by_name[r.name] = &r;
  for (auto& p : model.params()) {
    const auto it = by_name.find(p.name);
    if (it == by_name.end()) throw UnknownRecordError("missing record " + p.name);
    const WeightRecord& r = *it->second;
    if (r.dims != p.dims)
      throw ShapeError("shape mismatch for " + p.name + ": file has " + dims_string(r.dims) +
                       ", architecture needs " + dims_string(p.dims));
    const std::vector<float> values = r.dequantized();
    if (values.size() != p.value->size())
      throw ShapeError("payload size mismatch for " + p.name);
    *p.value = values;
    by_name.erase(it);
  }
  if (!by_name.empty())
    throw UnknownRecordError("unknown record " + by_name.begin()->first);
  return model;
}

}  // namespace

std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t size) {
  static const std::array<std::uint32_t, 256> table = make_crc_table();
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < size; ++i) c = table[(c ^ data[i]) & 0xff] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

std::size_t WeightRecord::element_count() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

std::vector<float> WeightRecord::dequantized() const {
  if (dtype == WeightDtype::kF32) return f32;
  std::vector<float> out(i8.size());
  for (std::size_t i = 0; i < i8.size(); ++i) out[i] = scale * static_cast<float>(i8[i]);
  return out;
}

std::vector<std::uint8_t> encode_weight_file(const WeightFile& wf) {
  std::vector<std::uint8_t> b;
  b.insert(b.end(), kMagic, kMagic + 4);
  append_u16(b, wf.version);
  append_u32(b, static_cast<std::uint32_t>(wf.records.size()));
  std::uint16_t flags = 0;
  if (wf.fused) flags |= kFlagFused;
  if (wf.quantized) flags |= kFlagQuantized;
  append_u16(b, flags);
  for (const WeightRecord& r : wf.records) {
    append_u16(b, static_cast<std::uint16_t>(r.name.size()));
    b.insert(b.end(), r.name.begin(), r.name.end());
    b.push_back(static_cast<std::uint8_t>(r.dtype));
    if (r.dtype == WeightDtype::kI8) append_f32(b, r.scale);
    b.push_back(static_cast<std::uint8_t>(r.dims.size()));
    for (std::uint32_t d : r.dims) append_u32(b, d);
    const std::size_t n = r.element_count();
    if (r.dtype == WeightDtype::kF32) {
      if (r.f32.size() != n) throw WeightError("record " + r.name + ": payload size mismatch");
      const std::size_t start = b.size();
      b.resize(start + 4 * n);
      std::memcpy(b.data() + start, r.f32.data(), 4 * n);
    } else {
      if (r.i8.size() != n) throw WeightError("record " + r.name + ": payload size mismatch");
      const std::size_t start = b.size();
      b.resize(start + n);
      std::memcpy(b.data() + start, r.i8.data(), n);
    }
  }
  append_u32(b, crc32_ieee(b.data(), b.size()));
  return b;
}

WeightFile decode_weight_file(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16) throw CrcError("weight file too short to hold a header and checksum");
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + static_cast<std::size_t>(i)]) << (8 * i);
  if (crc32_ieee(bytes.data(), bytes.size() - 4) != stored)
    throw CrcError("CRC mismatch: weight file is corrupt or truncated");

  Cursor c{bytes, 0, bytes.size() - 4};
  c.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw WeightError("not a weight file (bad magic)");
  c.pos = 4;
  WeightFile wf;
  wf.version = c.u16();
  if (wf.version != kFormatVersion)
    throw VersionError("unsupported weight format version " + std::to_string(wf.version));
  const std::uint32_t count = c.u32();
  const std::uint16_t flags = c.u16();
  wf.fused = (flags & kFlagFused) != 0;
  wf.quantized = (flags & kFlagQuantized) != 0;

  for (std::uint32_t i = 0; i < count; ++i) {
    WeightRecord r;
    const std::uint16_t name_len = c.u16();
    c.need(name_len);
    r.name.assign(reinterpret_cast<const char*>(bytes.data() + c.pos), name_len);
    c.pos += name_len;
    const std::uint8_t dtype = c.u8();
    if (dtype > 1) throw WeightError("record " + r.name + ": unsupported dtype");
    r.dtype = static_cast<WeightDtype>(dtype);
    if (r.dtype == WeightDtype::kI8) r.scale = c.f32();
    const std::uint8_t ndim = c.u8();
    r.dims.resize(ndim);
    for (std::uint8_t d = 0; d < ndim; ++d) r.dims[d] = c.u32();
    const std::size_t n = r.element_count();
    if (r.dtype == WeightDtype::kF32) {
      c.need(4 * n);
      r.f32.resize(n);
      std::memcpy(r.f32.data(), bytes.data() + c.pos, 4 * n);
      c.pos += 4 * n;
    } else {
      c.need(n);
      r.i8.resize(n);
      std::memcpy(r.i8.data(), bytes.data() + c.pos, n);
      c.pos += n;
    }
    for (const WeightRecord& prev : wf.records)
      if (prev.name == r.name) throw WeightError("duplicate record " + r.name);
    wf.records.push_back(std::move(r));
  }
  if (c.pos != c.limit) throw WeightError("malformed weight file: trailing bytes after records");
  return wf;
}

void write_weight_file(const WeightFile& wf, const std::string& path) {
  const std::vector<std::uint8_t> bytes = encode_weight_file(wf);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WeightError(path + ": cannot open file for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WeightError(path + ": write failed");
}

WeightFile read_weight_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightError(path + ": cannot open file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_weight_file(bytes);
}

WeightFile pack_student(Wav2Small& model) { return pack_model(model, false); }

WeightFile pack_fused(FusedModel& model) { return pack_model(model, true); }

WeightFile quantize_weights(FusedModel& model) {
  WeightFile wf = pack_fused(model);
  wf.quantized = true;
  for (WeightRecord& r : wf.records) {
    // The frontend records are DSP constants (DFT atoms, mel filters), not
    // learned weights; int8 would crush the small mel coefficients.
    if (r.name.rfind("frontend.", 0) == 0) continue;
    float peak = 0.0f;
    for (float v : r.f32) peak = std::max(peak, std::abs(v));
    r.scale = peak > 0.0f ? peak / 127.0f : 1.0f;
    r.i8.resize(r.f32.size());
    for (std::size_t i = 0; i < r.f32.size(); ++i) {
      const long q = std::lroundf(r.f32[i] / r.scale);
      r.i8[i] = static_cast<std::int8_t>(std::clamp(q, -127l, 127l));
    }
    r.dtype = WeightDtype::kI8;
    r.f32.clear();
    r.f32.shrink_to_fit();
  }
  return wf;
}

Wav2Small unpack_student(const WeightFile& wf) { return unpack_model<Wav2Small>(wf); }

FusedModel unpack_fused(const WeightFile& wf) { return unpack_model<FusedModel>(wf); }

void save_student(Wav2Small& model, const std::string& path) {
  write_weight_file(pack_student(model), path);
}

void save_fused(FusedModel& model, const std::string& path) {
  write_weight_file(pack_fused(model), path);
}

Wav2Small load_student(const std::string& path) {
  return unpack_student(read_weight_file(path));
}

FusedModel load_fused(const std::string& path) {
  return unpack_fused(read_weight_file(path));
}

AdvTriple LoadedModel::infer(const Waveform& w) const {
  return fused ? fused_net.forward(w) : student.forward(w);
}

TokenMatrix LoadedModel::tokens(const Waveform& w) const {
  return fused ? fused_net.forward_tokens(w) : student.forward_tokens(w);
}

LoadedModel load_model(const std::string& path) {
  const WeightFile wf = read_weight_file(path);
  LoadedModel m;
  m.fused = wf.fused;
  if (wf.fused)
    m.fused_net = unpack_fused(wf);
  else
    m.student = unpack_student(wf);
  return m;
}

}  // namespace w2s
