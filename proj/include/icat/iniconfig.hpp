// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace icat {

// Flat `[section]` / `key = value` configuration files. `#` and `;` start
// comments; whitespace around keys and values is trimmed.
class IniConfig {
 public:
  static IniConfig parse_file(const std::string& path);
  static IniConfig parse_string(const std::string& text, const std::string& name = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback = "") const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  // Comma-separated values.
  std::vector<std::string> get_list(const std::string& section, const std::string& key) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

std::vector<std::string> split_list(const std::string& text);

}  // namespace icat
