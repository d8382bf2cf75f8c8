#pragma once

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "surformer/core/error.hpp"

namespace surformer::io {

/// Nested key/value configuration. File form is line-based:
///
///   train {
///     optimizer adam
///     lr 5e-06
///   }
///
/// `#` starts a comment. Values are accessed with dotted paths.
class ConfigNode {
 public:
  bool has(const std::string& path) const { return find(path) != nullptr; }

  std::string get_string(const std::string& path) const {
    const std::string* v = find(path);
    if (!v) throw DataError("config: missing key '" + path + "'");
    return *v;
  }

  std::string get_string(const std::string& path, const std::string& fallback) const {
    const std::string* v = find(path);
    return v ? *v : fallback;
  }

  double get_double(const std::string& path) const {
    return std::stod(get_string(path));
  }

  double get_double(const std::string& path, double fallback) const {
    const std::string* v = find(path);
    return v ? std::stod(*v) : fallback;
  }

  long get_int(const std::string& path) const { return std::stol(get_string(path)); }

  long get_int(const std::string& path, long fallback) const {
    const std::string* v = find(path);
    return v ? std::stol(*v) : fallback;
  }

  bool get_bool(const std::string& path, bool fallback) const {
    const std::string* v = find(path);
    if (!v) return fallback;
    return *v == "true" || *v == "1" || *v == "yes";
  }

  /// Space-separated list value.
  std::vector<double> get_list(const std::string& path,
                               const std::vector<double>& fallback) const {
    const std::string* v = find(path);
    if (!v) return fallback;
    std::vector<double> out;
    std::istringstream is(*v);
    double x;
    while (is >> x) out.push_back(x);
    return out;
  }

  void set(const std::string& path, const std::string& value) {
    const std::size_t dot = path.find('.');
    if (dot == std::string::npos) {
      for (auto& e : entries_) {
        if (e.key == path && !e.child) {
          e.value = value;
          return;
        }
      }
      entries_.push_back({path, value, nullptr});
      return;
    }
    child(path.substr(0, dot)).set(path.substr(dot + 1), value);
  }

  template <typename T>
  void set_number(const std::string& path, T value) {
    char buf[64];
    if constexpr (std::is_floating_point_v<T>) {
      std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(value));
    } else {
      std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(value));
    }
    set(path, buf);
  }

  ConfigNode& child(const std::string& key) {
    for (auto& e : entries_) {
      if (e.key == key && e.child) return *e.child;
    }
    entries_.push_back({key, {}, std::make_unique<ConfigNode>()});
    return *entries_.back().child;
  }

  std::string serialize(int indent = 0) const {
    std::string out;
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    for (const auto& e : entries_) {
      if (e.child) {
        out += pad + e.key + " {\n" + e.child->serialize(indent + 1) + pad + "}\n";
      } else {
        out += pad + e.key + ' ' + e.value + '\n';
      }
    }
    return out;
  }

  static ConfigNode parse(const std::string& text) {
    ConfigNode root;
    std::vector<ConfigNode*> stack{&root};
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      if (trimmed == "}") {
        if (stack.size() < 2) {
          throw DataError("config: unmatched '}' at line " + std::to_string(line_no));
        }
        stack.pop_back();
        continue;
      }
      if (trimmed.size() > 1 && trimmed.back() == '{') {
        const std::string key = trim(trimmed.substr(0, trimmed.size() - 1));
        if (key.empty()) {
          throw DataError("config: unnamed block at line " + std::to_string(line_no));
        }
        stack.push_back(&stack.back()->child(key));
        continue;
      }
      const std::size_t space = trimmed.find_first_of(" \t");
      if (space == std::string::npos) {
        throw DataError("config: key without value at line " + std::to_string(line_no));
      }
      stack.back()->set(trimmed.substr(0, space), trim(trimmed.substr(space + 1)));
    }
    if (stack.size() != 1) throw DataError("config: unclosed block at end of file");
    return root;
  }

  static ConfigNode load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
  }

  void save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("config: cannot open " + path);
    os << serialize();
    if (!os) throw IoError("config: write failed for " + path);
  }

 private:
  struct Entry {
    std::string key;
    std::string value;
    std::unique_ptr<ConfigNode> child;
  };

  static std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  const std::string* find(const std::string& path) const {
    const std::size_t dot = path.find('.');
    if (dot == std::string::npos) {
      for (const auto& e : entries_) {
        if (e.key == path && !e.child) return &e.value;
      }
      return nullptr;
    }
    const std::string head = path.substr(0, dot);
    for (const auto& e : entries_) {
      if (e.key == head && e.child) return e.child->find(path.substr(dot + 1));
    }
    return nullptr;
  }

  std::vector<Entry> entries_;
};

}  // namespace surformer::io
