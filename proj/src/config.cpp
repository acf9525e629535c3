#include "reqforge/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "reqforge/domain.hpp"
#include "reqforge/error.hpp"

namespace reqforge {

Config::Config(std::map<std::string, std::string> file_values, Environment env)
    : file_(std::move(file_values)), env_(std::move(env)) {}

std::map<std::string, std::string> Config::parse(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = normalize_text(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::Parse, "config line " + std::to_string(line_no) + ": expected key = value");
    auto key = normalize_text(line.substr(0, eq));
    auto value = normalize_text(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw Error(ErrorCode::Parse, "config line " + std::to_string(line_no) + ": empty key");
    out[key] = value;
  }
  return out;
}

Config Config::load(const std::string& path, Environment env) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Config(parse(ss.str()), std::move(env));
}

std::string Config::env_name(const std::string& key) {
  std::string out = "REQFORGE_";
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::optional<std::string> Config::get(const std::string& key) const {
  if (auto it = flags_.find(key); it != flags_.end()) return it->second;
  if (auto it = env_.find(env_name(key)); it != env_.end()) return it->second;
  if (auto it = file_.find(key); it != file_.end()) return it->second;
  return std::nullopt;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

int Config::get_int(const std::string& key, int fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    int out = std::stoi(*v, &used);
    if (used != v->size()) throw std::invalid_argument(*v);
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "config key '" + key + "' is not an integer: '" + *v + "'");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    double out = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument(*v);
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "config key '" + key + "' is not a number: '" + *v + "'");
  }
}

}  // namespace reqforge
