// config.cpp: flat configuration parsing and resolved-value tracking.
#include "ltn/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ltn {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Strips a trailing comment that is not inside a quoted string.
std::string stripComment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string formatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Config Config::fromText(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(stripComment(line));
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    require(eq != std::string::npos,
            "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    require(!key.empty(),
            "config line " + std::to_string(lineno) + ": empty key");
    for (char ch : key) {
      require(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' ||
                  ch == '.' || ch == '-',
              "config line " + std::to_string(lineno) + ": bad key '" + key +
                  "'");
    }
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    require(!c.values_.count(key), "config: duplicate key '" + key + "'");
    c.values_[key] = value;
  }
  return c;
}

Config Config::fromFile(const std::string& path) {
  std::ifstream in(path);
  require(bool(in), "config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fromText(buf.str());
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

void Config::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

std::string Config::getString(const std::string& key,
                              const std::string& fallback) {
  const auto it = values_.find(key);
  const std::string v = it != values_.end() ? it->second : fallback;
  resolved_[key] = v;
  return v;
}

double Config::getDouble(const std::string& key, double fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = formatDouble(fallback);
    return fallback;
  }
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    fail("config: key '" + key + "' is not a number: " + it->second);
  }
  require(trim(it->second.substr(used)).empty(),
          "config: trailing junk in number for key '" + key + "'");
  resolved_[key] = it->second;
  return v;
}

int Config::getInt(const std::string& key, int fallback) {
  const double v = getDouble(key, double(fallback));
  const int i = int(v);
  require(double(i) == v, "config: key '" + key + "' is not an integer");
  return i;
}

bool Config::getBool(const std::string& key, bool fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = fallback ? "true" : "false";
    return fallback;
  }
  resolved_[key] = it->second;
  if (it->second == "true") return true;
  if (it->second == "false") return false;
  fail("config: key '" + key + "' must be true or false");
}

std::vector<double> Config::getDoubleList(const std::string& key,
                                          const std::vector<double>& fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    std::string repr = "[";
    for (std::size_t i = 0; i < fallback.size(); ++i)
      repr += (i ? ", " : "") + formatDouble(fallback[i]);
    resolved_[key] = repr + "]";
    return fallback;
  }
  std::string body = trim(it->second);
  if (body.size() >= 2 && body.front() == '[' && body.back() == ']')
    body = body.substr(1, body.size() - 2);
  std::vector<double> out;
  std::istringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      fail("config: list key '" + key + "' has a non-numeric entry: " + item);
    }
  }
  require(!out.empty(), "config: list key '" + key + "' is empty");
  resolved_[key] = it->second;
  return out;
}

void Config::validate(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (key == "schema_version") {
      require(trim(value) == "1", "config: unsupported schema_version " + value);
      continue;
    }
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail("config: unknown key '" + key + "' for this experiment");
  }
}

std::string Config::resolvedText() const {
  std::map<std::string, std::string> merged = resolved_;
  for (const auto& kv : values_) merged[kv.first] = kv.second;
  merged.insert({"schema_version", "1"});
  std::string out;
  for (const auto& [key, value] : merged) out += key + " = " + value + "\n";
  return out;
}

}  // namespace ltn
