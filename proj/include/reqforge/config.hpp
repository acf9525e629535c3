#pragma once

#include <map>
#include <optional>
#include <string>

namespace reqforge {

using Environment = std::map<std::string, std::string>;

/// Layered settings: command-line flags beat REQFORGE_* environment
/// variables, which beat the config file.
///
/// The file is plain `key = value` lines; `#` starts a comment and keys are
/// dotted (`endpoint.base_url`). The matching environment variable is the key
/// upper-cased with dots as underscores (`REQFORGE_ENDPOINT_BASE_URL`).
class Config {
 public:
  Config() = default;
  Config(std::map<std::string, std::string> file_values, Environment env);

  static Config load(const std::string& path, Environment env);
  static std::map<std::string, std::string> parse(const std::string& text);
  static std::string env_name(const std::string& key);

  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;

  void set_flag(const std::string& key, const std::string& value) { flags_[key] = value; }

 private:
  std::map<std::string, std::string> file_;
  Environment env_;
  std::map<std::string, std::string> flags_;
};

}  // namespace reqforge
