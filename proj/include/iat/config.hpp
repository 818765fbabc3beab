#pragma once

#include <map>
#include <string>
#include <vector>

namespace iat {

/// Flat `key = value` settings with `#` comments, as used by every config
/// file in this project.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text);
  static KeyValues load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }
  /// Keys in sorted order; parse(to_text()) reproduces the same map.
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace iat
