#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

namespace dsd {

// Flat key = value configuration. '#' starts a comment, values may be
// double-quoted, and "[section]" headers prefix later keys with "section.".
class Config {
 public:
  static Config Parse(std::string_view text, const std::string& origin = "<memory>");
  static Config Load(const std::filesystem::path& path);

  bool Has(const std::string& key) const { return values_.count(key) != 0; }
  void Set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::string GetString(const std::string& key, const std::string& fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  std::int64_t GetInt(const std::string& key, std::int64_t fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;

  // Throws Error(kConfig) naming every key outside `known`.
  void RequireKnown(const std::set<std::string>& known) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
};

}  // namespace dsd
