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

// Experiment configuration: INI-style sections of key = value lines.  The
// raw text is retained so outputs can echo their exact provenance, and a
// stable hash of it labels derived artifacts.

#ifndef VTRIG_CONFIG_H_
#define VTRIG_CONFIG_H_

#include <map>
#include <string>
#include <vector>

#include "vtrig/common.h"

namespace vtrig {

class Config {
 public:
  Config() = default;
  static Config Parse(const std::string& text);
  static Config Load(const std::string& path);

  bool Has(const std::string& section, const std::string& key) const;

  std::string Get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  std::string GetRequired(const std::string& section,
                          const std::string& key) const;
  double GetDouble(const std::string& section, const std::string& key,
                   double fallback) const;
  int GetInt(const std::string& section, const std::string& key,
             int fallback) const;
  uint64_t GetUint(const std::string& section, const std::string& key,
                   uint64_t fallback) const;
  bool GetBool(const std::string& section, const std::string& key,
               bool fallback) const;
  // Comma-separated lists.
  std::vector<double> GetDoubleList(const std::string& section,
                                    const std::string& key,
                                    const std::vector<double>& fallback) const;
  std::vector<int> GetIntList(const std::string& section,
                              const std::string& key,
                              const std::vector<int>& fallback) const;

  // Overrides one value in memory (used to derive per-variant configs).
  void Set(const std::string& section, const std::string& key,
           const std::string& value);

  const std::string& text() const { return text_; }
  // FNV-1a of the raw text, as fixed-width hex.
  std::string HashHex() const;

 private:
  std::string text_;
  std::map<std::string, std::string> values_;  // "section.key" -> value
};

}  // namespace vtrig

#endif  // VTRIG_CONFIG_H_
