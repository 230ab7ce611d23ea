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

// Synthetic bimodal meme dataset. The class is recoverable only from the
// combination of an image pattern and a token pattern:
//
//            square color/position   keyword in caption   class
//   neutral    red, top-left               no
//   positive   blue, bottom-right          yes
//   negative   blue, bottom-right          no
//
// Image alone separates neutral from the rest (2/3 accuracy ceiling), text
// alone separates positive from the rest (2/3 ceiling); only the pair
// decides all three classes. The color channel carries the image signal so
// it survives global average pooling; the position makes overlays legible.

#include <filesystem>
#include <string>
#include <vector>

#include "memesent/dataset.hpp"
#include "memesent/image.hpp"
#include "memesent/image_io.hpp"
#include "memesent/labels.hpp"
#include "memesent/rng.hpp"

namespace memesent {

struct SyntheticConfig {
    int per_class = 100;
    int image_size = 64;
    std::uint64_t seed = 0;
};

inline constexpr const char* kSyntheticKeyword = "dhamaka";

namespace detail {

inline ImageU8 synthetic_image(bool red_top_left, int size, Rng& rng) {
    ImageU8 img(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            for (int c = 0; c < 3; ++c) {
                const int v = 70 + static_cast<int>(rng.normal(0.0, 12.0));
                img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
            }
        }
    }
    const int side = size / 4;
    const int jitter = size / 16;
    const int margin = size / 8;
    const int base = red_top_left ? margin : size - margin - side;
    const int x0 = std::clamp(base + static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * jitter + 1))) - jitter,
                              0, size - side);
    const int y0 = std::clamp(base + static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * jitter + 1))) - jitter,
                              0, size - side);
    const int strong = 190 + static_cast<int>(rng.below(41));
    const int weak = 40 + static_cast<int>(rng.below(31));
    for (int y = y0; y < y0 + side; ++y) {
        for (int x = x0; x < x0 + side; ++x) {
            img.at(x, y, 0) = static_cast<std::uint8_t>(red_top_left ? strong : weak);
            img.at(x, y, 1) = static_cast<std::uint8_t>(weak);
            img.at(x, y, 2) = static_cast<std::uint8_t>(red_top_left ? weak : strong);
        }
    }
    return img;
}

inline std::string synthetic_caption(bool with_keyword, Rng& rng) {
    static const std::vector<std::string> fillers = {
        "meme", "lol", "bhai", "aaj", "khub", "dekh", "sera", "কি", "ভালো", "মজা",
    };
    const int words = 4 + static_cast<int>(rng.below(5));
    std::vector<std::string> tokens;
    for (int i = 0; i < words; ++i) tokens.push_back(fillers[rng.below(fillers.size())]);
    if (with_keyword) {
        tokens[rng.below(tokens.size())] = kSyntheticKeyword;
    }
    std::string caption;
    for (const std::string& t : tokens) {
        if (!caption.empty()) caption += ' ';
        caption += t;
    }
    return caption;
}

} // namespace detail

/// Writes per_class * 3 PNG images plus manifest.tsv under `dir`; returns
/// the manifest path. Deterministic for a given config.
inline std::string generate_bimodal_dataset(const std::string& dir, const SyntheticConfig& config) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    Rng rng(derive_seed(config.seed, "synthetic"));

    std::vector<Sample> samples;
    int index = 0;
    for (int i = 0; i < config.per_class; ++i) {
        for (Label label : kAllLabels) {
            const bool top_left = label == Label::kNeutral;
            const bool keyword = label == Label::kPositive;
            const std::string name = "img_" + std::to_string(index) + ".png";
            write_image((fs::path(dir) / name).string(),
                        detail::synthetic_image(top_left, config.image_size, rng));
            Sample s;
            s.id = "syn" + std::to_string(index);
            s.image_path = name;  // relative; the manifest reader resolves it
            s.caption = detail::synthetic_caption(keyword, rng);
            s.label = label;
            samples.push_back(std::move(s));
            ++index;
        }
    }
    const std::string manifest_path = (fs::path(dir) / "manifest.tsv").string();
    write_manifest_file(manifest_path, samples);
    return manifest_path;
}

} // namespace memesent
