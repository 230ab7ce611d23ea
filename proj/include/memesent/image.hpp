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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "memesent/errors.hpp"

namespace memesent {

/// Interleaved 8-bit RGB image.
struct ImageU8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // size = width * height * 3, row-major RGB

    ImageU8() = default;
    ImageU8(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h),
          pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill) {}

    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    bool empty() const { return pixels.empty(); }
};

/// Planar float image, channel-major (C,H,W). This is the model-facing
/// layout; values are whatever the pipeline stage put there ([0,1] after
/// scaling, standardized after mean/std).
struct ImageTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;  // size = channels * height * width

    ImageTensor() = default;
    ImageTensor(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * h * w, fill) {}

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    std::size_t size() const { return data.size(); }
};

inline ImageTensor to_tensor(const ImageU8& img) {
    ImageTensor t(3, img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                t.at(c, y, x) = img.at(x, y, c) / 255.0;
    return t;
}

inline ImageU8 to_u8(const ImageTensor& t) {
    if (t.channels != 3) throw ContractError("to_u8 wants a 3-channel tensor");
    ImageU8 img(t.width, t.height);
    for (int y = 0; y < t.height; ++y)
        for (int x = 0; x < t.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(t.at(c, y, x), 0.0, 1.0);
                img.at(x, y, c) = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
    return img;
}

/// Bilinear resize with half-pixel centers (align_corners=false convention).
inline ImageTensor resize_bilinear(const ImageTensor& src, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw ContractError("resize target must be positive");
    if (src.height == out_h && src.width == out_w) return src;
    ImageTensor dst(src.channels, out_h, out_w);
    const double scale_y = static_cast<double>(src.height) / out_h;
    const double scale_x = static_cast<double>(src.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double sy = (y + 0.5) * scale_y - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(src.height - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double fy = sy - y0;
        for (int x = 0; x < out_w; ++x) {
            double sx = (x + 0.5) * scale_x - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(src.width - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double fx = sx - x0;
            for (int c = 0; c < src.channels; ++c) {
                const double top = src.at(c, y0, x0) * (1 - fx) + src.at(c, y0, x1) * fx;
                const double bot = src.at(c, y1, x0) * (1 - fx) + src.at(c, y1, x1) * fx;
                dst.at(c, y, x) = top * (1 - fy) + bot * fy;
            }
        }
    }
    return dst;
}

} // namespace memesent
