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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace memesent {

inline constexpr char32_t kReplacementChar = 0xFFFD;

/// Decodes UTF-8 into codepoints. Malformed sequences become U+FFFD, one
/// replacement per bad byte, so decoding is total.
inline std::u32string utf8_decode(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    const auto byte = [&](std::size_t k) -> unsigned {
        return static_cast<unsigned char>(text[k]);
    };
    while (i < text.size()) {
        const unsigned b0 = byte(i);
        if (b0 < 0x80) {
            out.push_back(b0);
            ++i;
            continue;
        }
        int len = 0;
        char32_t cp = 0;
        if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
        else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
        else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
        else {
            out.push_back(kReplacementChar);
            ++i;
            continue;
        }
        if (i + static_cast<std::size_t>(len) > text.size()) {
            out.push_back(kReplacementChar);
            ++i;
            continue;
        }
        bool ok = true;
        for (int k = 1; k < len; ++k) {
            const unsigned bk = byte(i + static_cast<std::size_t>(k));
            if ((bk & 0xC0) != 0x80) { ok = false; break; }
            cp = (cp << 6) | (bk & 0x3F);
        }
        // Reject overlong forms and surrogate range.
        if (ok) {
            if (len == 2 && cp < 0x80) ok = false;
            if (len == 3 && cp < 0x800) ok = false;
            if (len == 4 && (cp < 0x10000 || cp > 0x10FFFF)) ok = false;
            if (cp >= 0xD800 && cp <= 0xDFFF) ok = false;
        }
        if (!ok) {
            out.push_back(kReplacementChar);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += static_cast<std::size_t>(len);
    }
    return out;
}

inline void utf8_append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string utf8_encode(const std::u32string& cps) {
    std::string out;
    out.reserve(cps.size() * 2);
    for (char32_t cp : cps) utf8_append(out, cp);
    return out;
}

/// Bengali-script letters and combining signs (block U+0980..U+09FF, minus
/// the digits U+09E6..U+09EF and the currency/symbol codepoints).
inline bool is_bengali_letter(char32_t cp) {
    if (cp < 0x0980 || cp > 0x09FF) return false;
    if (cp >= 0x09E6 && cp <= 0x09EF) return false;        // digits
    if (cp >= 0x09F2 && cp <= 0x09F9) return false;        // currency, fractions
    if (cp == 0x09FA || cp == 0x09FB || cp == 0x09FD) return false;
    return true;
}

/// Latin letters: ASCII plus Latin-1 Supplement and Latin Extended-A/B.
inline bool is_latin_letter(char32_t cp) {
    if ((cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z')) return true;
    if (cp >= 0x00C0 && cp <= 0x00FF) return cp != 0x00D7 && cp != 0x00F7;
    if (cp >= 0x0100 && cp <= 0x024F) return true;
    return false;
}

/// Whitespace as far as caption tokenization is concerned: ASCII whitespace
/// plus the common Unicode space separators.
inline bool is_space(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
        case 0x00A0: case 0x1680: case 0x202F: case 0x205F: case 0x3000:
        case 0x2028: case 0x2029:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

inline bool is_ascii_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

inline bool is_bengali_digit(char32_t cp) { return cp >= 0x09E6 && cp <= 0x09EF; }

} // namespace memesent
