#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spatfactor/model.hpp"

namespace spatfactor::config {

// Flat key = value configuration with dotted section prefixes. Unknown keys
// are rejected (fail closed). '#' starts a comment.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& def = "") const;
  double get_double(const std::string& key, double def) const;
  long get_long(const std::string& key, long def) const;
  bool get_bool(const std::string& key, bool def) const;

  // canonical echo, keys sorted
  std::string serialize() const;
  const std::map<std::string, std::string>& entries() const { return kv_; }

  // throws ConfigError on any key outside the known set
  void validate_keys() const;

 private:
  std::map<std::string, std::string> kv_;
};

// known key list (shared with the CLI's documentation output)
const std::vector<std::string>& known_keys();

// Build a ModelSpec from a config against a loaded dataset. Applies temporal
// spec from the data timepoints.
ModelSpec spec_from_config(const Config& cfg, const Dataset& data);

}  // namespace spatfactor::config
