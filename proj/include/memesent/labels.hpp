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

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "memesent/errors.hpp"

namespace memesent {

/// Sentiment classes. The index order (Neutral=0, Positive=1, Negative=2) is
/// fixed project-wide: confusion matrices, logits and checkpoints all use it.
enum class Label : int {
    kNeutral = 0,
    kPositive = 1,
    kNegative = 2,
};

inline constexpr std::size_t kNumClasses = 3;

inline constexpr std::array<Label, kNumClasses> kAllLabels = {
    Label::kNeutral, Label::kPositive, Label::kNegative};

inline std::string_view label_name(Label label) {
    switch (label) {
        case Label::kNeutral: return "neutral";
        case Label::kPositive: return "positive";
        case Label::kNegative: return "negative";
    }
    return "?";
}

/// Parses a label string, case-insensitively. Throws ValidationError on
/// anything outside {neutral, positive, negative}.
inline Label parse_label(std::string_view text) {
    std::string lower;
    lower.reserve(text.size());
    for (char c : text) {
        lower.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
    if (lower == "neutral") return Label::kNeutral;
    if (lower == "positive") return Label::kPositive;
    if (lower == "negative") return Label::kNegative;
    throw ValidationError("unknown label: '" + std::string(text) + "'");
}

inline int label_index(Label label) { return static_cast<int>(label); }

inline Label label_from_index(int index) {
    if (index < 0 || index >= static_cast<int>(kNumClasses)) {
        throw ContractError("class index out of range: " + std::to_string(index));
    }
    return static_cast<Label>(index);
}

} // namespace memesent
