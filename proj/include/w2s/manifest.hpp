#pragma once

#include "w2s/model.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace w2s {

struct ManifestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ManifestRow {
  std::string path;
  AdvTriple label;
  std::string split;
};

// Tab-separated lines: path, arousal, dominance, valence, optional split tag.
// Malformed lines are collected with their line numbers, never silently
// dropped. Relative audio paths resolve against the manifest's directory.
struct ManifestData {
  std::string base_dir;
  std::vector<ManifestRow> rows;
  std::vector<std::pair<int, std::string>> malformed;

  std::string resolve(const ManifestRow& row) const;
};

ManifestData read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows);

// Flat key=value text; '#' starts a comment, blank lines are skipped. Typed
// getters record which keys were consumed so unrecognized keys can be
// rejected as probable typos.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback);
  int get_int(const std::string& key, int fallback);
  float get_float(const std::string& key, float fallback);
  bool get_bool(const std::string& key, bool fallback);

  // Throws listing every key never consumed by a getter.
  void reject_unconsumed() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> consumed_;
};

}  // namespace w2s
