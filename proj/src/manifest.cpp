#include "w2s/manifest.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace w2s {

namespace {

std::string dir_of(const std::string& path) {
  const std::size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool parse_finite(const std::string& text, float* out) {
  try {
    std::size_t used = 0;
    const float v = std::stof(text, &used);
    if (used != text.size() || !std::isfinite(v)) return false;
    *out = v;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::string ManifestData::resolve(const ManifestRow& row) const {
  if (!row.path.empty() && row.path.front() == '/') return row.path;
  return base_dir + "/" + row.path;
}

ManifestData read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError(path + ": cannot open manifest");
  ManifestData data;
  data.base_dir = dir_of(path);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 4 && fields.size() != 5) {
      data.malformed.emplace_back(line_no, "expected 4 or 5 tab-separated fields, got " +
                                               std::to_string(fields.size()));
      continue;
    }
    ManifestRow row;
    row.path = fields[0];
    float vals[3];
    bool ok = !row.path.empty();
    if (!ok) {
      data.malformed.emplace_back(line_no, "empty audio path");
      continue;
    }
    for (int d = 0; d < 3 && ok; ++d)
      ok = parse_finite(fields[static_cast<std::size_t>(d) + 1], &vals[d]);
    if (!ok) {
      data.malformed.emplace_back(line_no, "labels must be finite reals");
      continue;
    }
    row.label = {vals[0], vals[1], vals[2]};
    if (fields.size() == 5) row.split = fields[4];
    data.rows.push_back(std::move(row));
  }
  return data;
}

void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ManifestError(path + ": cannot open manifest for writing");
  for (const ManifestRow& row : rows) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "\t%.6f\t%.6f\t%.6f", row.label.arousal,
                  row.label.dominance, row.label.valence);
    out << row.path << buf;
    if (!row.split.empty()) out << '\t' << row.split;
    out << '\n';
  }
  if (!out) throw ManifestError(path + ": write failed");
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError(path + ": cannot open config");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip_cr(raw);
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const std::size_t last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ManifestError("config line " + std::to_string(line_no) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const std::size_t key_end = key.find_last_not_of(" \t");
    key = key.substr(0, key_end + 1);
    const std::size_t val_start = value.find_first_not_of(" \t");
    value = val_start == std::string::npos ? std::string() : value.substr(val_start);
    if (cfg.values_.count(key))
      throw ManifestError("config line " + std::to_string(line_no) + ": duplicate key " + key);
    cfg.values_[key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) {
  consumed_[key] = true;
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int Config::get_int(const std::string& key, int fallback) {
  consumed_[key] = true;
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    throw ManifestError("config key " + key + ": expected an integer, got '" + it->second + "'");
  }
}

float Config::get_float(const std::string& key, float fallback) {
  consumed_[key] = true;
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  float v = 0.0f;
  if (!parse_finite(it->second, &v))
    throw ManifestError("config key " + key + ": expected a finite real, got '" + it->second + "'");
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) {
  consumed_[key] = true;
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ManifestError("config key " + key + ": expected true/false, got '" + it->second + "'");
}

void Config::reject_unconsumed() const {
  std::string unknown;
  for (const auto& [key, value] : values_)
    if (!consumed_.count(key)) unknown += unknown.empty() ? key : ", " + key;
  if (!unknown.empty()) throw ManifestError("unrecognized config keys: " + unknown);
}

}  // namespace w2s
