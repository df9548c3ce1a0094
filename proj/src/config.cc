#include "dsd/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dsd/error.h"

namespace dsd {
namespace {

std::string_view Trim(std::string_view s) {
  const char* ws = " \t\r";
  auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

// Strips a trailing comment that is not inside double quotes.
std::string_view StripComment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

}  // namespace

Config Config::Parse(std::string_view text, const std::string& origin) {
  Config config;
  config.origin_ = origin;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = Trim(StripComment(raw));
    if (line.empty()) continue;
    auto where = [&] { return origin + ":" + std::to_string(line_no); };
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(Errc::kConfig, where() + ": bad section header");
      section = std::string(Trim(line.substr(1, line.size() - 2)));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::kConfig, where() + ": expected key = value");
    }
    std::string key(Trim(line.substr(0, eq)));
    std::string_view value = Trim(line.substr(eq + 1));
    if (key.empty()) throw Error(Errc::kConfig, where() + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (!section.empty()) key = section + "." + key;
    config.values_[key] = std::string(value);
  }
  return config;
}

Config Config::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str(), path.string());
}

std::string Config::GetString(const std::string& key,
                              const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::GetDouble(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used == it->second.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::kConfig, origin_ + ": " + key + " is not a number", it->second);
}

std::int64_t Config::GetInt(const std::string& key, std::int64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::int64_t v = 0;
  const std::string& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(Errc::kConfig, origin_ + ": " + key + " is not an integer", s);
  }
  return v;
}

bool Config::GetBool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& s = it->second;
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(Errc::kConfig, origin_ + ": " + key + " is not a boolean", s);
}

void Config::RequireKnown(const std::set<std::string>& known) const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (!known.count(key)) unknown += (unknown.empty() ? "" : ",") + key;
  }
  if (!unknown.empty()) {
    throw Error(Errc::kConfig, origin_ + ": unknown configuration keys", unknown);
  }
}

}  // namespace dsd
