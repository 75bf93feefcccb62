#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qem/errors.hpp"

namespace qem {

// Minimal TOML reader covering what the config files actually use: [section]
// headers, key = value lines, strings, booleans, numbers, and single-line
// arrays, with # comments. Dotted keys, multi-line arrays and inline tables
// are not TOML we emit, and parsing rejects them with a line number.

struct TomlValue {
  enum class Kind { boolean, number, string, array };
  Kind kind = Kind::number;
  bool b = false;
  double num = 0.0;
  std::string str;
  std::vector<TomlValue> arr;
};

class Toml {
 public:
  static Toml parse(const std::string& text) {
    Toml t;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string s = strip_comment(line, lineno);
      const std::string body = trim(s);
      if (body.empty()) continue;
      if (body.front() == '[') {
        if (body.back() != ']')
          throw ConfigError(err(lineno, "unterminated section header"));
        section = trim(body.substr(1, body.size() - 2));
        if (section.empty()) throw ConfigError(err(lineno, "empty section name"));
        continue;
      }
      const size_t eq = body.find('=');
      if (eq == std::string::npos)
        throw ConfigError(err(lineno, "expected key = value"));
      const std::string key = trim(body.substr(0, eq));
      if (key.empty()) throw ConfigError(err(lineno, "empty key"));
      if (t.tables_[section].count(key))
        throw ConfigError(err(lineno, "duplicate key '" + key + "'"));
      t.tables_[section][key] = parse_value(trim(body.substr(eq + 1)), lineno);
    }
    return t;
  }

  static Toml parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = tables_.find(section);
    return s != tables_.end() && s->second.count(key) > 0;
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const {
    const TomlValue* v = find(section, key);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::number)
      throw ConfigError(where(section, key) + " must be a number");
    return v->num;
  }

  int get_int(const std::string& section, const std::string& key, int fallback) const {
    const TomlValue* v = find(section, key);
    if (!v) return fallback;
    return to_int(*v, where(section, key));
  }

  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const {
    const TomlValue* v = find(section, key);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::boolean)
      throw ConfigError(where(section, key) + " must be true or false");
    return v->b;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    const TomlValue* v = find(section, key);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::string)
      throw ConfigError(where(section, key) + " must be a quoted string");
    return v->str;
  }

  std::vector<double> get_double_array(const std::string& section,
                                       const std::string& key,
                                       const std::vector<double>& fallback) const {
    const TomlValue* v = find(section, key);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::array)
      throw ConfigError(where(section, key) + " must be an array");
    std::vector<double> out;
    for (const TomlValue& e : v->arr) {
      if (e.kind != TomlValue::Kind::number)
        throw ConfigError(where(section, key) + " must contain only numbers");
      out.push_back(e.num);
    }
    return out;
  }

  std::vector<int> get_int_array(const std::string& section, const std::string& key,
                                 const std::vector<int>& fallback) const {
    const TomlValue* v = find(section, key);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::array)
      throw ConfigError(where(section, key) + " must be an array");
    std::vector<int> out;
    for (const TomlValue& e : v->arr)
      out.push_back(to_int(e, where(section, key)));
    return out;
  }

 private:
  std::map<std::string, std::map<std::string, TomlValue>> tables_;

  static std::string err(int lineno, const std::string& what) {
    return "config line " + std::to_string(lineno) + ": " + what;
  }
  static std::string where(const std::string& section, const std::string& key) {
    return "config key [" + section + "]." + key;
  }

  const TomlValue* find(const std::string& section, const std::string& key) const {
    auto s = tables_.find(section);
    if (s == tables_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  static int to_int(const TomlValue& v, const std::string& at) {
    if (v.kind != TomlValue::Kind::number || v.num != std::floor(v.num) ||
        std::abs(v.num) > 9.0e15)
      throw ConfigError(at + " must be an integer");
    return static_cast<int>(v.num);
  }

  static std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  // Remove a trailing # comment, honoring quoted strings.
  static std::string strip_comment(const std::string& line, int lineno) {
    bool in_str = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
      else if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    if (in_str) throw ConfigError(err(lineno, "unterminated string"));
    return line;
  }

  static TomlValue parse_value(const std::string& text, int lineno) {
    if (text.empty()) throw ConfigError(err(lineno, "missing value"));
    TomlValue v;
    if (text.front() == '"') {
      if (text.size() < 2 || text.back() != '"')
        throw ConfigError(err(lineno, "unterminated string"));
      v.kind = TomlValue::Kind::string;
      for (size_t i = 1; i + 1 < text.size(); ++i) {
        if (text[i] == '\\' && i + 2 < text.size()) {
          ++i;
          if (text[i] == '"') v.str += '"';
          else if (text[i] == '\\') v.str += '\\';
          else throw ConfigError(err(lineno, "unsupported escape sequence"));
        } else if (text[i] == '"') {
          throw ConfigError(err(lineno, "unexpected quote inside string"));
        } else {
          v.str += text[i];
        }
      }
      return v;
    }
    if (text.front() == '[') {
      if (text.back() != ']')
        throw ConfigError(err(lineno, "arrays must close on the same line"));
      v.kind = TomlValue::Kind::array;
      const std::string inner = trim(text.substr(1, text.size() - 2));
      if (inner.empty()) return v;
      size_t start = 0;
      int depth = 0;
      bool in_str = false;
      for (size_t i = 0; i <= inner.size(); ++i) {
        const bool at_end = i == inner.size();
        if (!at_end) {
          if (inner[i] == '"') in_str = !in_str;
          if (!in_str && inner[i] == '[') ++depth;
          if (!in_str && inner[i] == ']') --depth;
        }
        if (at_end || (inner[i] == ',' && depth == 0 && !in_str)) {
          v.arr.push_back(parse_value(trim(inner.substr(start, i - start)), lineno));
          start = i + 1;
        }
      }
      return v;
    }
    if (text == "true" || text == "false") {
      v.kind = TomlValue::Kind::boolean;
      v.b = text == "true";
      return v;
    }
    char* end = nullptr;
    v.num = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size())
      throw ConfigError(err(lineno, "cannot parse value '" + text + "'"));
    v.kind = TomlValue::Kind::number;
    return v;
  }
};

}  // namespace qem
