// Copyright (c) 2026 The vtrig Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vtrig/config.h"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vtrig {

namespace {

std::string Trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitCommas(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, ',')) {
    cur = Trim(cur);
    if (!cur.empty()) parts.push_back(cur);
  }
  return parts;
}

}  // namespace

Config Config::Parse(const std::string& text) {
  Config cfg;
  cfg.text_ = text;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw DataError("config line " + std::to_string(lineno) +
                        ": malformed section header");
      }
      section = Trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(lineno) +
                      ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key.empty()) {
      throw DataError("config line " + std::to_string(lineno) + ": empty key");
    }
    cfg.values_[section + "." + key] = value;
  }
  return cfg;
}

Config Config::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str());
}

bool Config::Has(const std::string& section, const std::string& key) const {
  return values_.count(section + "." + key) > 0;
}

std::string Config::Get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  auto it = values_.find(section + "." + key);
  return it == values_.end() ? fallback : it->second;
}

std::string Config::GetRequired(const std::string& section,
                                const std::string& key) const {
  auto it = values_.find(section + "." + key);
  if (it == values_.end()) {
    throw DataError("config: missing required key [" + section + "] " + key);
  }
  return it->second;
}

double Config::GetDouble(const std::string& section, const std::string& key,
                         double fallback) const {
  if (!Has(section, key)) return fallback;
  const std::string v = Get(section, key, "");
  size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw DataError("config: [" + section + "] " + key + " is not a number");
  }
  if (pos != v.size()) {
    throw DataError("config: [" + section + "] " + key + " is not a number");
  }
  return out;
}

int Config::GetInt(const std::string& section, const std::string& key,
                   int fallback) const {
  if (!Has(section, key)) return fallback;
  const std::string v = Get(section, key, "");
  size_t pos = 0;
  long out;
  try {
    out = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw DataError("config: [" + section + "] " + key + " is not an integer");
  }
  if (pos != v.size()) {
    throw DataError("config: [" + section + "] " + key + " is not an integer");
  }
  return static_cast<int>(out);
}

uint64_t Config::GetUint(const std::string& section, const std::string& key,
                         uint64_t fallback) const {
  if (!Has(section, key)) return fallback;
  const std::string v = Get(section, key, "");
  size_t pos = 0;
  unsigned long long out;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw DataError("config: [" + section + "] " + key +
                    " is not an unsigned integer");
  }
  if (pos != v.size()) {
    throw DataError("config: [" + section + "] " + key +
                    " is not an unsigned integer");
  }
  return static_cast<uint64_t>(out);
}

bool Config::GetBool(const std::string& section, const std::string& key,
                     bool fallback) const {
  if (!Has(section, key)) return fallback;
  const std::string v = Get(section, key, "");
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw DataError("config: [" + section + "] " + key + " is not a boolean");
}

std::vector<double> Config::GetDoubleList(
    const std::string& section, const std::string& key,
    const std::vector<double>& fallback) const {
  if (!Has(section, key)) return fallback;
  std::vector<double> out;
  for (const std::string& part : SplitCommas(Get(section, key, ""))) {
    try {
      out.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw DataError("config: [" + section + "] " + key +
                      " has a non-numeric element");
    }
  }
  return out;
}

std::vector<int> Config::GetIntList(const std::string& section,
                                    const std::string& key,
                                    const std::vector<int>& fallback) const {
  if (!Has(section, key)) return fallback;
  std::vector<int> out;
  for (const std::string& part : SplitCommas(Get(section, key, ""))) {
    try {
      out.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw DataError("config: [" + section + "] " + key +
                      " has a non-integer element");
    }
  }
  return out;
}

void Config::Set(const std::string& section, const std::string& key,
                 const std::string& value) {
  values_[section + "." + key] = value;
  text_ += "\n# override\n[" + section + "]\n" + key + " = " + value + "\n";
}

std::string Config::HashHex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fnv1a(text_)));
  return std::string(buf);
}

}  // namespace vtrig
