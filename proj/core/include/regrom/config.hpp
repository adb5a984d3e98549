#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "regrom/common.hpp"

namespace regrom {

/// Flat key-value configuration with [section] headers; keys are stored as
/// "section.key". Round-trips bit-exactly through save/load.
class Config {
 public:
  Config() = default;

  static Config load(const std::string& path);
  static Config parse(const std::string& text);
  void save(const std::string& path) const;
  std::string canonical_text() const;  // sorted, normalized

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key, double dflt) const;
  int get_int(const std::string& key, int dflt) const;
  uint64_t get_u64(const std::string& key, uint64_t dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;
  void set(const std::string& key, const std::string& value);

  const std::map<std::string, std::string>& entries() const { return kv_; }

  /// FNV-1a hash of the canonical text; embedded in bundles so predict can
  /// refuse mismatched configurations.
  uint64_t fingerprint() const;

 private:
  std::map<std::string, std::string> kv_;
};

/// FNV-1a 64-bit over bytes.
uint64_t fnv1a(const std::string& bytes);

}  // namespace regrom
