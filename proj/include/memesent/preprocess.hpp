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
#include <string>

#include "memesent/errors.hpp"
#include "memesent/image.hpp"
#include "memesent/image_io.hpp"
#include "memesent/text_normalize.hpp"

namespace memesent {

/// Caption and image standardization settings. Defaults: 224x224 output,
/// the usual ImageNet channel statistics, embedded normalization table.
struct PreprocessConfig {
    int target_width = 224;
    int target_height = 224;
    std::array<double, 3> pixel_mean = {0.485, 0.456, 0.406};
    std::array<double, 3> pixel_std = {0.229, 0.224, 0.225};
    NormalizationTable normalization = default_normalization_table();

    void validate() const {
        if (target_width <= 0 || target_height <= 0) {
            throw ConfigError("preprocess target size must be positive");
        }
        for (double s : pixel_std) {
            if (s <= 0.0) throw ConfigError("pixel_std entries must be positive");
        }
    }
};

inline std::string normalize_caption(const std::string& text, const PreprocessConfig& config) {
    return normalize_caption(text, config.normalization);
}

/// scale to [0,1] (already done by to_tensor) then (x - mean) / std per channel.
inline ImageTensor standardize(ImageTensor t, const PreprocessConfig& config) {
    for (int c = 0; c < t.channels; ++c) {
        const double mean = config.pixel_mean[static_cast<std::size_t>(c % 3)];
        const double inv_std = 1.0 / config.pixel_std[static_cast<std::size_t>(c % 3)];
        for (int y = 0; y < t.height; ++y)
            for (int x = 0; x < t.width; ++x)
                t.at(c, y, x) = (t.at(c, y, x) - mean) * inv_std;
    }
    return t;
}

/// Decode -> RGB -> bilinear resize to target -> [0,1] -> standardize.
/// Output shape is always (3, target_height, target_width).
inline ImageTensor prepare_image(const std::string& image_path, const PreprocessConfig& config) {
    config.validate();
    const ImageU8 raw = read_image(image_path);
    ImageTensor t = to_tensor(raw);
    t = resize_bilinear(t, config.target_height, config.target_width);
    return standardize(std::move(t), config);
}

/// Same pipeline for an already-decoded image (used by perturbation code).
inline ImageTensor prepare_image(const ImageU8& raw, const PreprocessConfig& config) {
    config.validate();
    ImageTensor t = to_tensor(raw);
    t = resize_bilinear(t, config.target_height, config.target_width);
    return standardize(std::move(t), config);
}

} // namespace memesent
