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

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "memesent/errors.hpp"
#include "memesent/unicode.hpp"

namespace memesent {

/// Caption normalization table. Three layers, applied in order:
///   1. drop       - codepoints removed outright (ZWJ/ZWNJ, BOM, ...)
///   2. compose    - canonical (base, combining) pairs folded into their
///                   precomposed codepoint; covers the Bengali block fully
///                   and the common Latin diacritics
///   3. substitute - one codepoint replaced by a string (punctuation
///                   variants folded to ASCII)
/// A final whitespace pass squeezes runs into single spaces and trims.
///
/// The table is versioned so checkpoints can record which normalization
/// produced their vocabulary.
struct NormalizationTable {
    std::string version = "memesent-norm-1";
    std::set<char32_t> drop;
    std::map<std::pair<char32_t, char32_t>, char32_t> compose;
    std::map<char32_t, std::u32string> substitute;
};

namespace detail {

inline void add_latin_compositions(NormalizationTable& t) {
    struct Row { char32_t mark; std::string_view bases; std::string_view composed; };
    // base letters x combining mark -> Latin-1/Extended-A precomposed.
    static const Row rows[] = {
        {0x0300, "AEIOUaeiou", "ÀÈÌÒÙàèìòù"},
        {0x0301, "AEIOUYaeiouy", "ÁÉÍÓÚÝáéíóúý"},
        {0x0302, "AEIOUaeiou", "ÂÊÎÔÛâêîôû"},
        {0x0303, "ANOano", "ÃÑÕãñõ"},
        {0x0308, "AEIOUaeiouy", "ÄËÏÖÜäëïöüÿ"},
        {0x0327, "Cc", "Çç"},
    };
    for (const Row& row : rows) {
        const std::u32string composed = utf8_decode(row.composed);
        for (std::size_t i = 0; i < row.bases.size(); ++i) {
            t.compose[{static_cast<char32_t>(row.bases[i]), row.mark}] = composed[i];
        }
    }
}

} // namespace detail

/// The embedded default table.
inline const NormalizationTable& default_normalization_table() {
    static const NormalizationTable table = [] {
        NormalizationTable t;

        // Invisible formatting characters. Bengali conjunct rendering hints
        // (ZWJ/ZWNJ) carry no sentiment signal and multiply token variants.
        for (char32_t cp : {char32_t(0x200B), char32_t(0x200C), char32_t(0x200D),
                            char32_t(0x2060), char32_t(0xFEFF), char32_t(0x00AD)}) {
            t.drop.insert(cp);
        }
        for (char32_t cp = 0xFE00; cp <= 0xFE0F; ++cp) t.drop.insert(cp);

        // Bengali canonical compositions: dependent vowel signs O/AU and the
        // three nukta letters (rra, rha, yya). Captions scraped from social
        // media mix the composed and decomposed spellings freely.
        t.compose[{0x09C7, 0x09BE}] = 0x09CB;  // e + aa  -> o
        t.compose[{0x09C7, 0x09D7}] = 0x09CC;  // e + au-length -> au
        t.compose[{0x09A1, 0x09BC}] = 0x09DC;  // dda + nukta -> rra
        t.compose[{0x09A2, 0x09BC}] = 0x09DD;  // ddha + nukta -> rha
        t.compose[{0x09AF, 0x09BC}] = 0x09DF;  // ya + nukta -> yya

        detail::add_latin_compositions(t);

        // Punctuation variants folded to ASCII.
        const auto sub = [&t](char32_t from, std::string_view to) {
            t.substitute[from] = utf8_decode(to);
        };
        for (char32_t cp : {char32_t(0x2018), char32_t(0x2019), char32_t(0x201A),
                            char32_t(0x201B), char32_t(0x2032)}) {
            sub(cp, "'");
        }
        for (char32_t cp : {char32_t(0x201C), char32_t(0x201D), char32_t(0x201E),
                            char32_t(0x201F), char32_t(0x2033)}) {
            sub(cp, "\"");
        }
        for (char32_t cp : {char32_t(0x2010), char32_t(0x2011), char32_t(0x2012),
                            char32_t(0x2013), char32_t(0x2014), char32_t(0x2015),
                            char32_t(0x2212)}) {
            sub(cp, "-");
        }
        sub(0x2026, "...");
        sub(0x2044, "/");
        return t;
    }();
    return table;
}

/// Loads a table from a UTF-8 file, one directive per line:
///   drop<TAB>TEXT          every codepoint of TEXT is dropped
///   compose<TAB>AB<TAB>C   the two codepoints of AB compose into C
///   sub<TAB>FROM<TAB>TO    single codepoint FROM becomes string TO
/// Lines starting with '#' and blank lines are ignored.
inline NormalizationTable load_normalization_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open normalization table: " + path);
    NormalizationTable t;
    t.version = "file:" + path;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '\t') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        const auto bad = [&](const std::string& why) {
            throw ValidationError("normalization table " + path + ":" +
                                  std::to_string(lineno) + ": " + why);
        };
        if (fields[0] == "drop") {
            if (fields.size() != 2) bad("drop takes one field");
            for (char32_t cp : utf8_decode(fields[1])) t.drop.insert(cp);
        } else if (fields[0] == "compose") {
            if (fields.size() != 3) bad("compose takes two fields");
            const std::u32string from = utf8_decode(fields[1]);
            const std::u32string to = utf8_decode(fields[2]);
            if (from.size() != 2 || to.size() != 1) bad("compose wants 2 codepoints -> 1");
            t.compose[{from[0], from[1]}] = to[0];
        } else if (fields[0] == "sub") {
            if (fields.size() != 3) bad("sub takes two fields");
            const std::u32string from = utf8_decode(fields[1]);
            if (from.size() != 1) bad("sub source must be a single codepoint");
            t.substitute[from[0]] = utf8_decode(fields[2]);
        } else {
            bad("unknown directive '" + fields[0] + "'");
        }
    }
    return t;
}

/// Canonicalizes a caption: drops, compositions, substitutions, then
/// whitespace runs collapsed to single spaces and the ends trimmed.
/// Total and idempotent.
inline std::string normalize_caption(std::string_view text,
                                     const NormalizationTable& table = default_normalization_table()) {
    const std::u32string in = utf8_decode(text);

    std::u32string composed;
    composed.reserve(in.size());
    for (char32_t cp : in) {
        if (table.drop.count(cp)) continue;
        if (!composed.empty()) {
            auto it = table.compose.find({composed.back(), cp});
            if (it != table.compose.end()) {
                composed.back() = it->second;
                continue;
            }
        }
        composed.push_back(cp);
    }

    std::u32string substituted;
    substituted.reserve(composed.size());
    for (char32_t cp : composed) {
        auto it = table.substitute.find(cp);
        if (it != table.substitute.end()) {
            substituted.append(it->second);
        } else {
            substituted.push_back(cp);
        }
    }

    std::u32string out;
    out.reserve(substituted.size());
    bool pending_space = false;
    for (char32_t cp : substituted) {
        if (is_space(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(cp);
    }
    return utf8_encode(out);
}

} // namespace memesent
