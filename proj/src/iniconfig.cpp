// SPDX-License-Identifier: Apache-2.0
#include "icat/iniconfig.hpp"

#include <fstream>
#include <sstream>

#include "icat/errors.hpp"

namespace icat {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

IniConfig IniConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

IniConfig IniConfig::parse_string(const std::string& text, const std::string& name) {
  IniConfig cfg;
  std::string section;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ValidationError(name + ":" + std::to_string(lineno) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(name + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError(name + ":" + std::to_string(lineno) + ": empty key");
    }
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

bool IniConfig::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string IniConfig::get(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  const auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double IniConfig::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return std::stod(get(section, key));
  } catch (const std::exception&) {
    throw ValidationError("config [" + section + "] " + key + ": not a number");
  }
}

int IniConfig::get_int(const std::string& section, const std::string& key, int fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return std::stoi(get(section, key));
  } catch (const std::exception&) {
    throw ValidationError("config [" + section + "] " + key + ": not an integer");
  }
}

std::uint64_t IniConfig::get_u64(const std::string& section, const std::string& key,
                                 std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return std::stoull(get(section, key));
  } catch (const std::exception&) {
    throw ValidationError("config [" + section + "] " + key + ": not an integer");
  }
}

bool IniConfig::get_bool(const std::string& section, const std::string& key,
                         bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("config [" + section + "] " + key + ": not a boolean");
}

std::vector<std::string> IniConfig::get_list(const std::string& section,
                                             const std::string& key) const {
  return split_list(get(section, key));
}

}  // namespace icat
