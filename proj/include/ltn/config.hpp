// config.hpp: flat key-value run configuration (a TOML-style subset:
// `key = value` lines, `#` comments, quoted strings, bracketed lists).
#pragma once

#include <map>
#include <string>
#include <vector>

#include "ltn/core.hpp"

namespace ltn {

class Config {
 public:
  Config() = default;
  static Config fromText(const std::string& text);
  static Config fromFile(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  // Getters record the resolved value (explicit or default), so the
  // resolved-config copy written next to run outputs is complete.
  std::string getString(const std::string& key, const std::string& fallback);
  double getDouble(const std::string& key, double fallback);
  int getInt(const std::string& key, int fallback);
  bool getBool(const std::string& key, bool fallback);
  std::vector<double> getDoubleList(const std::string& key,
                                    const std::vector<double>& fallback);

  // Schema gate: every explicitly set key must appear in `allowed`
  // (schema_version is always allowed and must be 1 when present).
  void validate(const std::vector<std::string>& allowed) const;

  // Sorted `key = value` lines of every explicit and resolved entry.
  std::string resolvedText() const;

 private:
  std::map<std::string, std::string> values_;    // explicit entries
  mutable std::map<std::string, std::string> resolved_;  // defaults used
};

}  // namespace ltn
