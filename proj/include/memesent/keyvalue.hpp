// Copyright 2026 The Memesent Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// key=value documents: checkpoint configs and --config files.

#include <fstream>
#include <map>
#include <string>

#include "memesent/errors.hpp"

namespace memesent {

using KeyValueMap = std::map<std::string, std::string>;

inline KeyValueMap read_keyvalue_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open key-value file: " + path);
    KeyValueMap kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

inline void write_keyvalue_file(const std::string& path, const KeyValueMap& kv) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write key-value file: " + path);
    for (const auto& [key, value] : kv) out << key << '=' << value << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline const std::string& kv_get(const KeyValueMap& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError("missing key '" + key + "' in config");
    return it->second;
}

inline std::string kv_get_or(const KeyValueMap& kv, const std::string& key,
                             const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

} // namespace memesent
