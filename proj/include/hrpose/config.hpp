#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hrpose {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` text. Blank lines and '#' comments are ignored; keys may
// contain dots ("model.width"). Later assignments override earlier ones.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig parse(std::string_view text, const std::string& origin = "<text>");
  static KeyValueConfig load(const std::string& path);

  // For every key, an environment variable PREFIX + KEY (upper-cased, '.'
  // replaced by '_') overrides the value, e.g. HRPOSE_MODEL_WIDTH.
  void apply_env_overrides(const std::string& prefix = "HRPOSE_");
  // Also consults the environment for `keys` absent from the file.
  void apply_env_overrides(const std::string& prefix, const std::vector<std::string>& keys);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value);
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  // Keys under `prefix.` with the prefix removed.
  KeyValueConfig section(const std::string& prefix) const;
  // Throws ConfigError naming the first key not in `known`.
  void require_known(const std::vector<std::string>& known) const;

 private:
  std::string where(const std::string& key) const;
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> origins_;
};

std::string env_key(const std::string& prefix, const std::string& key);

}  // namespace hrpose
