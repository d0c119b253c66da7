#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memrank/profile.hpp"

namespace memrank {

// Flat `key = value` document; '#' starts a comment. Keys are dotted paths
// by convention (split.train, grpo.clip, ...). Lookup helpers throw on a
// malformed value, not on a missing key.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load_file(const std::string& path);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  int64_t get_i64(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;  // comma separated

  void set(const std::string& key, const std::string& value);

  // digest over the canonical (sorted key=value) serialization
  uint64_t digest() const;
  std::string canonical() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

struct RunManifest {
  std::string command;
  uint64_t seed = 0;
  std::string profile;
  AblationFlags ablation;
  uint64_t config_digest = 0;
  std::map<std::string, std::string> input_digests;   // name -> hex digest
  std::map<std::string, std::string> output_digests;  // name -> hex digest
  int64_t created_unix = 0;

  void write(const std::string& path) const;
  static RunManifest read(const std::string& path);
};

}  // namespace memrank
