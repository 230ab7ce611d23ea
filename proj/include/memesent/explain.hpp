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

// LIME for image and text inputs against any black-box predict function.
//
// Pipeline per instance: interpretable feature space (superpixels or word
// tokens) -> binary presence masks (row 0 = the unperturbed instance) ->
// perturbed inputs -> black-box class probabilities -> kernel-weighted
// ridge regression. The surrogate's signed coefficients are the
// explanation; positive supports the explained class, negative opposes it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "memesent/dataset.hpp"
#include "memesent/errors.hpp"
#include "memesent/image.hpp"
#include "memesent/labels.hpp"
#include "memesent/rng.hpp"
#include "memesent/unicode.hpp"

namespace memesent {

enum class ImageBaseline { kMeanColor, kGray, kZeros };
enum class TextBaseline { kRemoveToken, kMaskToken };
enum class SegmenterKind { kGrid, kSlic };

inline std::string image_baseline_name(ImageBaseline b) {
    switch (b) {
        case ImageBaseline::kMeanColor: return "mean_color";
        case ImageBaseline::kGray: return "gray";
        case ImageBaseline::kZeros: return "zeros";
    }
    return "?";
}

inline ImageBaseline parse_image_baseline(const std::string& s) {
    if (s == "mean_color") return ImageBaseline::kMeanColor;
    if (s == "gray") return ImageBaseline::kGray;
    if (s == "zeros") return ImageBaseline::kZeros;
    throw ConfigError("unknown image baseline: '" + s + "'");
}

inline std::string text_baseline_name(TextBaseline b) {
    return b == TextBaseline::kRemoveToken ? "remove_token" : "mask_token";
}

inline TextBaseline parse_text_baseline(const std::string& s) {
    if (s == "remove_token") return TextBaseline::kRemoveToken;
    if (s == "mask_token") return TextBaseline::kMaskToken;
    throw ConfigError("unknown text baseline: '" + s + "'");
}

struct LimeConfig {
    int num_samples = 1000;
    double kernel_width = 0.0;     // <= 0 resolves to 0.25 * sqrt(d)
    double ridge_lambda = 1.0;
    int num_segments_target = 50;
    int top_k = 5;
    std::uint64_t seed = 0;
    ImageBaseline image_baseline = ImageBaseline::kMeanColor;
    TextBaseline text_baseline = TextBaseline::kRemoveToken;
    SegmenterKind segmenter = SegmenterKind::kGrid;
    int target_class = -1;  // -1: explain the model's predicted class
    int predict_chunk = 32;

    double resolved_kernel_width(int feature_count) const {
        if (kernel_width > 0.0) return kernel_width;
        return 0.25 * std::sqrt(static_cast<double>(std::max(feature_count, 1)));
    }

    void validate() const {
        if (num_samples < 2) throw ConfigError("num_samples must be at least 2");
        if (ridge_lambda < 0.0) throw ConfigError("ridge_lambda must be >= 0");
        if (num_segments_target < 1) throw ConfigError("num_segments_target must be >= 1");
        if (top_k < 1) throw ConfigError("top_k must be >= 1");
        if (predict_chunk < 1) throw ConfigError("predict_chunk must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// Feature spaces
// ---------------------------------------------------------------------------

struct FeatureSpace {
    enum class Kind { kSuperpixels, kTokens };

    Kind kind = Kind::kTokens;
    int count = 0;  // d

    // superpixels: a segment id per pixel, ids contiguous 0..count-1
    int height = 0;
    int width = 0;
    std::vector<int> segment_map;

    // tokens with byte spans into the source caption
    std::vector<std::string> tokens;
    std::vector<std::pair<int, int>> spans;

    bool operator==(const FeatureSpace&) const = default;
};

/// Near-uniform rectangular grid with approximately `target` cells. A
/// square count on a square image tiles exactly (49 on 224x224 gives 49
/// cells of 32x32).
inline FeatureSpace segment_grid(int height, int width, int target) {
    if (height <= 0 || width <= 0) throw ContractError("segment_grid wants a non-empty image");
    if (target < 1 || target > height * width) {
        throw ContractError("segment target must be in [1, pixel count]");
    }
    const double aspect = static_cast<double>(height) / static_cast<double>(width);
    int rows = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    rows = std::clamp(rows, 1, height);
    int cols = static_cast<int>(std::lround(static_cast<double>(target) / rows));
    cols = std::clamp(cols, 1, width);
    rows = std::min(rows, height);

    FeatureSpace fs;
    fs.kind = FeatureSpace::Kind::kSuperpixels;
    fs.height = height;
    fs.width = width;
    fs.count = rows * cols;
    fs.segment_map.resize(static_cast<std::size_t>(height) * width);
    for (int y = 0; y < height; ++y) {
        const int r = std::min(static_cast<int>(static_cast<std::int64_t>(y) * rows / height), rows - 1);
        for (int x = 0; x < width; ++x) {
            const int c = std::min(static_cast<int>(static_cast<std::int64_t>(x) * cols / width), cols - 1);
            fs.segment_map[static_cast<std::size_t>(y) * width + x] = r * cols + c;
        }
    }
    return fs;
}

namespace detail {

struct LabPixel {
    double l = 0, a = 0, b = 0;
};

inline LabPixel rgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const auto linearize = [](double c) {
        return c > 0.04045 ? std::pow((c + 0.055) / 1.055, 2.4) : c / 12.92;
    };
    const double r = linearize(r8 / 255.0);
    const double g = linearize(g8 / 255.0);
    const double b = linearize(b8 / 255.0);
    const double x = (0.4124 * r + 0.3576 * g + 0.1805 * b) / 0.95047;
    const double y = 0.2126 * r + 0.7152 * g + 0.0722 * b;
    const double z = (0.0193 * r + 0.1192 * g + 0.9505 * b) / 1.08883;
    const auto f = [](double t) {
        return t > 0.008856 ? std::cbrt(t) : 7.787 * t + 16.0 / 116.0;
    };
    LabPixel lab;
    lab.l = 116.0 * f(y) - 16.0;
    lab.a = 500.0 * (f(x) - f(y));
    lab.b = 200.0 * (f(y) - f(z));
    return lab;
}

} // namespace detail

/// SLIC superpixels: k-means over (L,a,b,x,y) with a locality window,
/// followed by a connectivity pass. Deterministic (no random state).
inline FeatureSpace segment_slic(const ImageU8& image, int target, double compactness = 10.0,
                                 int iterations = 10) {
    const int h = image.height, w = image.width;
    if (h <= 0 || w <= 0) throw ContractError("segment_slic wants a non-empty image");
    const int n = h * w;
    if (target < 1 || target > n) throw ContractError("segment target must be in [1, pixel count]");

    std::vector<detail::LabPixel> lab(static_cast<std::size_t>(n));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            lab[static_cast<std::size_t>(y) * w + x] =
                detail::rgb_to_lab(image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2));

    const double step = std::sqrt(static_cast<double>(n) / target);
    struct Center {
        double l, a, b, x, y;
    };
    std::vector<Center> centers;
    for (double cy = step / 2; cy < h; cy += step) {
        for (double cx = step / 2; cx < w; cx += step) {
            // nudge to the lowest-gradient pixel in a 3x3 neighborhood
            int bx = static_cast<int>(cx), by = static_cast<int>(cy);
            double best = 1e300;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int px = std::clamp(static_cast<int>(cx) + dx, 1, w - 2);
                    const int py = std::clamp(static_cast<int>(cy) + dy, 1, h - 2);
                    const auto& right = lab[static_cast<std::size_t>(py) * w + px + 1];
                    const auto& left = lab[static_cast<std::size_t>(py) * w + px - 1];
                    const auto& down = lab[static_cast<std::size_t>(py + 1) * w + px];
                    const auto& up = lab[static_cast<std::size_t>(py - 1) * w + px];
                    const double grad = (right.l - left.l) * (right.l - left.l) +
                                        (down.l - up.l) * (down.l - up.l);
                    if (grad < best) {
                        best = grad;
                        bx = px;
                        by = py;
                    }
                }
            }
            const auto& p = lab[static_cast<std::size_t>(by) * w + bx];
            centers.push_back({p.l, p.a, p.b, static_cast<double>(bx), static_cast<double>(by)});
        }
    }
    if (centers.empty()) centers.push_back({lab[0].l, lab[0].a, lab[0].b, 0.0, 0.0});

    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    std::vector<double> dist(static_cast<std::size_t>(n));
    const double inv_s2 = (compactness * compactness) / (step * step);
    for (int iter = 0; iter < iterations; ++iter) {
        std::fill(dist.begin(), dist.end(), 1e300);
        for (std::size_t k = 0; k < centers.size(); ++k) {
            const Center& c = centers[k];
            const int x0 = std::max(0, static_cast<int>(c.x - 2 * step));
            const int x1 = std::min(w - 1, static_cast<int>(c.x + 2 * step));
            const int y0 = std::max(0, static_cast<int>(c.y - 2 * step));
            const int y1 = std::min(h - 1, static_cast<int>(c.y + 2 * step));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    const detail::LabPixel& p = lab[i];
                    const double dl = p.l - c.l, da = p.a - c.a, db = p.b - c.b;
                    const double dx = x - c.x, dy = y - c.y;
                    const double d = dl * dl + da * da + db * db + (dx * dx + dy * dy) * inv_s2;
                    if (d < dist[i]) {
                        dist[i] = d;
                        labels[i] = static_cast<int>(k);
                    }
                }
            }
        }
        std::vector<Center> sums(centers.size(), {0, 0, 0, 0, 0});
        std::vector<int> counts(centers.size(), 0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                Center& s = sums[static_cast<std::size_t>(labels[i])];
                s.l += lab[i].l;
                s.a += lab[i].a;
                s.b += lab[i].b;
                s.x += x;
                s.y += y;
                counts[static_cast<std::size_t>(labels[i])]++;
            }
        }
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (counts[k] == 0) continue;
            centers[k] = {sums[k].l / counts[k], sums[k].a / counts[k], sums[k].b / counts[k],
                          sums[k].x / counts[k], sums[k].y / counts[k]};
        }
    }

    // Connectivity: relabel 4-connected components, folding fragments
    // smaller than a quarter cell into the previously seen neighbor.
    FeatureSpace fs;
    fs.kind = FeatureSpace::Kind::kSuperpixels;
    fs.height = h;
    fs.width = w;
    fs.segment_map.assign(static_cast<std::size_t>(n), -1);
    const int min_size = std::max(1, static_cast<int>(step * step / 4));
    int next_label = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t start = static_cast<std::size_t>(y) * w + x;
            if (fs.segment_map[start] >= 0) continue;
            int adjacent = -1;
            std::vector<std::size_t> component = {start};
            fs.segment_map[start] = next_label;
            std::queue<std::size_t> frontier;
            frontier.push(start);
            while (!frontier.empty()) {
                const std::size_t i = frontier.front();
                frontier.pop();
                const int px = static_cast<int>(i) % w, py = static_cast<int>(i) / w;
                const int nx[4] = {px - 1, px + 1, px, px};
                const int ny[4] = {py, py, py - 1, py + 1};
                for (int k = 0; k < 4; ++k) {
                    if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
                    const std::size_t j = static_cast<std::size_t>(ny[k]) * w + nx[k];
                    if (fs.segment_map[j] >= 0) {
                        if (fs.segment_map[j] != next_label) adjacent = fs.segment_map[j];
                        continue;
                    }
                    if (labels[j] != labels[start]) continue;
                    fs.segment_map[j] = next_label;
                    component.push_back(j);
                    frontier.push(j);
                }
            }
            if (static_cast<int>(component.size()) < min_size && adjacent >= 0) {
                for (std::size_t i : component) fs.segment_map[i] = adjacent;
            } else {
                ++next_label;
            }
        }
    }
    fs.count = next_label;
    return fs;
}

/// Whitespace-delimited word tokens with byte spans into the caption.
/// Tokenization agrees with the dataset module's word counting.
inline FeatureSpace tokenize_for_explanation(const std::string& caption) {
    FeatureSpace fs;
    fs.kind = FeatureSpace::Kind::kTokens;
    std::size_t i = 0;
    std::size_t token_start = std::string::npos;
    const auto flush = [&](std::size_t end) {
        if (token_start == std::string::npos) return;
        fs.tokens.push_back(caption.substr(token_start, end - token_start));
        fs.spans.emplace_back(static_cast<int>(token_start), static_cast<int>(end));
        token_start = std::string::npos;
    };
    while (i < caption.size()) {
        const unsigned lead = static_cast<unsigned char>(caption[i]);
        std::size_t len = 1;
        if ((lead & 0xE0) == 0xC0) len = 2;
        else if ((lead & 0xF0) == 0xE0) len = 3;
        else if ((lead & 0xF8) == 0xF0) len = 4;
        len = std::min(len, caption.size() - i);
        const std::u32string cp = utf8_decode(std::string_view(caption).substr(i, len));
        const bool space = cp.size() == 1 && is_space(cp[0]);
        if (space) {
            flush(i);
        } else if (token_start == std::string::npos) {
            token_start = i;
        }
        i += len;
    }
    flush(caption.size());
    fs.count = static_cast<int>(fs.tokens.size());
    return fs;
}

// ---------------------------------------------------------------------------
// Masks and perturbations
// ---------------------------------------------------------------------------

using Mask = std::vector<std::uint8_t>;

/// Row 0 is all ones (the original instance); the rest are i.i.d.
/// Bernoulli(0.5) per cell.
inline std::vector<Mask> sample_masks(int feature_count, int num_samples, std::uint64_t seed) {
    if (feature_count < 1) throw ContractError("sample_masks wants at least one feature");
    if (num_samples < 1) throw ContractError("sample_masks wants at least one row");
    std::vector<Mask> masks;
    masks.reserve(static_cast<std::size_t>(num_samples));
    masks.emplace_back(static_cast<std::size_t>(feature_count), std::uint8_t{1});
    Rng rng(derive_seed(seed, "lime-masks"));
    for (int i = 1; i < num_samples; ++i) {
        Mask row(static_cast<std::size_t>(feature_count));
        for (auto& cell : row) cell = rng.bernoulli(0.5) ? 1 : 0;
        masks.push_back(std::move(row));
    }
    return masks;
}

/// Per-segment mean color, the default replacement for hidden superpixels.
inline std::vector<std::array<std::uint8_t, 3>> segment_mean_colors(const ImageU8& image,
                                                                    const FeatureSpace& fs) {
    std::vector<std::array<double, 3>> sums(static_cast<std::size_t>(fs.count), {0, 0, 0});
    std::vector<std::int64_t> counts(static_cast<std::size_t>(fs.count), 0);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const auto seg = static_cast<std::size_t>(
                fs.segment_map[static_cast<std::size_t>(y) * image.width + x]);
            for (int c = 0; c < 3; ++c) sums[seg][static_cast<std::size_t>(c)] += image.at(x, y, c);
            counts[seg]++;
        }
    }
    std::vector<std::array<std::uint8_t, 3>> means(static_cast<std::size_t>(fs.count));
    for (std::size_t s = 0; s < means.size(); ++s) {
        for (std::size_t c = 0; c < 3; ++c) {
            means[s][c] = counts[s] == 0
                              ? 0
                              : static_cast<std::uint8_t>(std::lround(sums[s][c] / counts[s]));
        }
    }
    return means;
}

/// Masked-off superpixels replaced by the baseline color. The all-ones mask
/// returns the original image bit-exactly.
inline ImageU8 apply_mask_image(const ImageU8& image, const Mask& mask, const FeatureSpace& fs,
                                ImageBaseline baseline,
                                const std::vector<std::array<std::uint8_t, 3>>* mean_colors = nullptr) {
    if (fs.kind != FeatureSpace::Kind::kSuperpixels) {
        throw ContractError("apply_mask_image wants a superpixel feature space");
    }
    if (static_cast<int>(mask.size()) != fs.count) throw ContractError("mask length mismatch");
    if (image.height != fs.height || image.width != fs.width) {
        throw ContractError("image does not match the feature space dimensions");
    }
    ImageU8 out = image;
    std::vector<std::array<std::uint8_t, 3>> means;
    const std::vector<std::array<std::uint8_t, 3>>* palette = mean_colors;
    if (baseline == ImageBaseline::kMeanColor && palette == nullptr) {
        means = segment_mean_colors(image, fs);
        palette = &means;
    }
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const int seg = fs.segment_map[static_cast<std::size_t>(y) * image.width + x];
            if (mask[static_cast<std::size_t>(seg)]) continue;
            std::array<std::uint8_t, 3> color = {0, 0, 0};
            if (baseline == ImageBaseline::kGray) color = {128, 128, 128};
            if (baseline == ImageBaseline::kMeanColor) color = (*palette)[static_cast<std::size_t>(seg)];
            out.at(x, y, 0) = color[0];
            out.at(x, y, 1) = color[1];
            out.at(x, y, 2) = color[2];
        }
    }
    return out;
}

/// Masked-off tokens dropped (remove_token) or replaced by the placeholder
/// (mask_token); kept tokens joined by single spaces.
inline std::string apply_mask_text(const FeatureSpace& fs, const Mask& mask, TextBaseline baseline) {
    if (fs.kind != FeatureSpace::Kind::kTokens) {
        throw ContractError("apply_mask_text wants a token feature space");
    }
    if (static_cast<int>(mask.size()) != fs.count) throw ContractError("mask length mismatch");
    std::string out;
    for (std::size_t i = 0; i < fs.tokens.size(); ++i) {
        const bool keep = mask[i] != 0;
        if (!keep && baseline == TextBaseline::kRemoveToken) continue;
        if (!out.empty()) out += ' ';
        out += keep ? fs.tokens[i] : "[MASK]";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Surrogate fit
// ---------------------------------------------------------------------------

/// Cosine distance of each mask row from the all-ones row (1 for a row of
/// zeros).
inline std::vector<double> mask_cosine_distances(const std::vector<Mask>& masks) {
    std::vector<double> out;
    out.reserve(masks.size());
    for (const Mask& m : masks) {
        const double d = static_cast<double>(m.size());
        double dot = 0, norm_sq = 0;
        for (std::uint8_t v : m) {
            dot += v;
            norm_sq += static_cast<double>(v) * v;
        }
        if (norm_sq == 0.0) {
            out.push_back(1.0);
        } else {
            out.push_back(1.0 - dot / (std::sqrt(norm_sq) * std::sqrt(d)));
        }
    }
    return out;
}

struct SurrogateFit {
    std::vector<double> feature_weights;
    double intercept = 0;
    double r2 = 1.0;
};

namespace detail {

/// Cholesky solve of a symmetric positive-definite system, in place.
/// Returns false when a pivot collapses (singular / indefinite).
inline bool solve_spd(std::vector<std::vector<double>>& a, std::vector<double>& b) {
    const std::size_t n = a.size();
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a[j][j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j][k] * a[j][k];
        if (!(diag > 1e-12)) return false;
        a[j][j] = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a[i][j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i][k] * a[j][k];
            a[i][j] = v / a[j][j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {  // L y = b
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= a[i][k] * b[k];
        b[i] = v / a[i][i];
    }
    for (std::size_t i = n; i-- > 0;) {  // L^T x = y
        double v = b[i];
        for (std::size_t k = i + 1; k < n; ++k) v -= a[k][i] * b[k];
        b[i] = v / a[i][i];
    }
    return true;
}

} // namespace detail

/// Weighted ridge regression of black-box outputs on mask bits. Sample
/// weights are exp(-dist^2 / kernel_width^2); the intercept is unpenalized.
inline SurrogateFit fit_surrogate(const std::vector<Mask>& masks,
                                  const std::vector<double>& predictions,
                                  const std::vector<double>& distances, const LimeConfig& config) {
    if (masks.empty()) throw ContractError("fit_surrogate wants at least one mask");
    const std::size_t m = masks.size();
    const std::size_t d = masks[0].size();
    if (predictions.size() != m || distances.size() != m) {
        throw ContractError("masks, predictions and distances must align");
    }
    if (m < d + 2) {
        throw ContractError("need at least d+2 = " + std::to_string(d + 2) +
                            " samples to fit " + std::to_string(d) + " features");
    }
    for (double p : predictions) {
        if (!std::isfinite(p)) throw ContractError("non-finite prediction passed to fit_surrogate");
    }

    const double sigma = config.resolved_kernel_width(static_cast<int>(d));
    std::vector<double> weights(m);
    for (std::size_t i = 0; i < m; ++i) {
        weights[i] = std::exp(-(distances[i] * distances[i]) / (sigma * sigma));
    }

    // Normal equations over the augmented design [1, z].
    const std::size_t dim = d + 1;
    std::vector<std::vector<double>> a(dim, std::vector<double>(dim, 0.0));
    std::vector<double> b(dim, 0.0);
    std::vector<double> row(dim);
    for (std::size_t i = 0; i < m; ++i) {
        if (masks[i].size() != d) throw ContractError("ragged mask matrix");
        row[0] = 1.0;
        for (std::size_t j = 0; j < d; ++j) row[j + 1] = masks[i][j];
        const double w = weights[i];
        for (std::size_t r = 0; r < dim; ++r) {
            if (row[r] == 0.0) continue;
            const double wr = w * row[r];
            for (std::size_t c = 0; c <= r; ++c) a[r][c] += wr * row[c];
            b[r] += wr * predictions[i];
        }
    }
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = r + 1; c < dim; ++c) a[r][c] = a[c][r];
    }
    for (std::size_t j = 1; j < dim; ++j) a[j][j] += config.ridge_lambda;

    std::vector<double> solution = b;
    if (!detail::solve_spd(a, solution)) {
        throw ConfigError("singular normal equations; set ridge_lambda > 0 to regularize");
    }

    SurrogateFit fit;
    fit.intercept = solution[0];
    fit.feature_weights.assign(solution.begin() + 1, solution.end());

    double weight_sum = 0, mean = 0, energy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        weight_sum += weights[i];
        mean += weights[i] * predictions[i];
        energy += weights[i] * predictions[i] * predictions[i];
    }
    mean = weight_sum > 0 ? mean / weight_sum : 0.0;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < m; ++i) {
        double predicted = fit.intercept;
        for (std::size_t j = 0; j < d; ++j) predicted += fit.feature_weights[j] * masks[i][j];
        ss_res += weights[i] * (predictions[i] - predicted) * (predictions[i] - predicted);
        ss_tot += weights[i] * (predictions[i] - mean) * (predictions[i] - mean);
    }
    // a variance at rounding-noise level means the outputs were constant
    const double noise_floor = 1e-20 * std::max(energy, 1e-300);
    fit.r2 = ss_tot <= noise_floor ? 1.0 : 1.0 - ss_res / ss_tot;
    return fit;
}

// ---------------------------------------------------------------------------
// Explanations
// ---------------------------------------------------------------------------

struct Explanation {
    int target_class = 0;
    std::vector<double> feature_weights;  // surrogate coefficients for target_class
    double intercept = 0;
    double surrogate_r2 = 1.0;
    int masks_used = 0;
    std::uint64_t seed = 0;
    FeatureSpace feature_space;
    // rendering metadata: one coefficient vector per class and the model's
    // probabilities on the unperturbed instance
    std::vector<std::vector<double>> class_weights;
    std::vector<double> original_probs;

    bool operator==(const Explanation&) const = default;
};

using ImagePredictFn =
    std::function<std::vector<std::vector<double>>(const std::vector<ImageU8>&)>;
using TextPredictFn =
    std::function<std::vector<std::vector<double>>(const std::vector<std::string>&)>;

namespace detail {

inline void check_probability_rows(const std::vector<std::vector<double>>& rows,
                                   std::size_t expected) {
    if (rows.size() != expected) {
        throw ContractError("predict function returned " + std::to_string(rows.size()) +
                            " rows for " + std::to_string(expected) + " instances");
    }
    for (const auto& row : rows) {
        if (row.size() != kNumClasses) {
            throw ContractError("predict function must return one probability per class");
        }
        double sum = 0;
        for (double p : row) {
            if (!std::isfinite(p) || p < -1e-9) {
                throw ContractError("predict function returned a non-probability row");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw ContractError("predict function rows must sum to 1");
        }
    }
}

template <typename MakeInstance, typename Predict>
Explanation explain_common(const FeatureSpace& fs, const LimeConfig& config,
                           MakeInstance&& make_instance, Predict&& predict) {
    config.validate();
    Explanation out;
    out.seed = config.seed;
    out.feature_space = fs;

    if (fs.count == 0) {
        // nothing to perturb: classify the original instance, explain nothing
        const auto rows = predict(std::vector{make_instance(Mask{})});
        check_probability_rows(rows, 1);
        out.original_probs = rows[0];
        out.target_class = config.target_class >= 0
                               ? config.target_class
                               : static_cast<int>(std::max_element(rows[0].begin(), rows[0].end()) -
                                                  rows[0].begin());
        return out;
    }

    if (config.num_samples < fs.count + 2) {
        throw ContractError("num_samples must be at least d+2 = " +
                            std::to_string(fs.count + 2) + " for " + std::to_string(fs.count) +
                            " features");
    }
    if (config.target_class >= static_cast<int>(kNumClasses)) {
        throw ContractError("target_class out of range");
    }

    const std::vector<Mask> masks = sample_masks(fs.count, config.num_samples, config.seed);

    std::vector<std::vector<double>> all_rows;
    all_rows.reserve(masks.size());
    std::vector<decltype(make_instance(Mask{}))> chunk;
    for (std::size_t begin = 0; begin < masks.size();
         begin += static_cast<std::size_t>(config.predict_chunk)) {
        const std::size_t end =
            std::min(masks.size(), begin + static_cast<std::size_t>(config.predict_chunk));
        chunk.clear();
        for (std::size_t i = begin; i < end; ++i) chunk.push_back(make_instance(masks[i]));
        auto rows = predict(chunk);
        check_probability_rows(rows, chunk.size());
        for (auto& r : rows) all_rows.push_back(std::move(r));
    }

    out.original_probs = all_rows[0];  // row 0 is the unperturbed instance
    out.target_class = config.target_class >= 0
                           ? config.target_class
                           : static_cast<int>(std::max_element(all_rows[0].begin(),
                                                               all_rows[0].end()) -
                                              all_rows[0].begin());
    out.masks_used = static_cast<int>(masks.size());

    const std::vector<double> distances = mask_cosine_distances(masks);
    std::vector<double> column(masks.size());
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        for (std::size_t i = 0; i < masks.size(); ++i) column[i] = all_rows[i][c];
        out.class_weights.push_back(fit_surrogate(masks, column, distances, config).feature_weights);
    }
    for (std::size_t i = 0; i < masks.size(); ++i) {
        column[i] = all_rows[i][static_cast<std::size_t>(out.target_class)];
    }
    const SurrogateFit fit = fit_surrogate(masks, column, distances, config);
    out.feature_weights = fit.feature_weights;
    out.intercept = fit.intercept;
    out.surrogate_r2 = fit.r2;
    return out;
}

} // namespace detail

/// Image-mode LIME against a caller-supplied feature space.
inline Explanation explain_image(const ImageU8& image, const FeatureSpace& fs,
                                 const ImagePredictFn& predict, const LimeConfig& config) {
    if (fs.kind != FeatureSpace::Kind::kSuperpixels) {
        throw ContractError("explain_image wants a superpixel feature space");
    }
    std::vector<std::array<std::uint8_t, 3>> means;
    if (config.image_baseline == ImageBaseline::kMeanColor) {
        means = segment_mean_colors(image, fs);
    }
    return detail::explain_common(
        fs, config,
        [&](const Mask& mask) {
            if (mask.empty()) return image;
            return apply_mask_image(image, mask, fs, config.image_baseline, &means);
        },
        predict);
}

/// Image-mode LIME; the feature space comes from the configured segmenter.
inline Explanation explain_instance_image(const ImageU8& image, const ImagePredictFn& predict,
                                          const LimeConfig& config) {
    const FeatureSpace fs = config.segmenter == SegmenterKind::kGrid
                                ? segment_grid(image.height, image.width, config.num_segments_target)
                                : segment_slic(image, config.num_segments_target);
    return explain_image(image, fs, predict, config);
}

/// Text-mode LIME over whitespace word tokens of the caption.
inline Explanation explain_instance_text(const std::string& caption, const TextPredictFn& predict,
                                         const LimeConfig& config) {
    const FeatureSpace fs = tokenize_for_explanation(caption);
    return detail::explain_common(
        fs, config,
        [&](const Mask& mask) {
            if (mask.empty()) return caption;
            return apply_mask_text(fs, mask, config.text_baseline);
        },
        predict);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json feature_space_to_json(const FeatureSpace& fs) {
    nlohmann::json j;
    j["count"] = fs.count;
    if (fs.kind == FeatureSpace::Kind::kSuperpixels) {
        j["kind"] = "superpixels";
        j["height"] = fs.height;
        j["width"] = fs.width;
        j["segment_map"] = fs.segment_map;
    } else {
        j["kind"] = "tokens";
        j["tokens"] = fs.tokens;
        nlohmann::json spans = nlohmann::json::array();
        for (const auto& [b, e] : fs.spans) spans.push_back({b, e});
        j["spans"] = spans;
    }
    return j;
}

inline FeatureSpace feature_space_from_json(const nlohmann::json& j) {
    FeatureSpace fs;
    fs.count = j.at("count").get<int>();
    if (j.at("kind") == "superpixels") {
        fs.kind = FeatureSpace::Kind::kSuperpixels;
        fs.height = j.at("height").get<int>();
        fs.width = j.at("width").get<int>();
        fs.segment_map = j.at("segment_map").get<std::vector<int>>();
    } else {
        fs.kind = FeatureSpace::Kind::kTokens;
        fs.tokens = j.at("tokens").get<std::vector<std::string>>();
        for (const auto& span : j.at("spans")) {
            fs.spans.emplace_back(span.at(0).get<int>(), span.at(1).get<int>());
        }
    }
    return fs;
}

inline nlohmann::json explanation_to_json(const Explanation& e) {
    return nlohmann::json{
        {"target_class", e.target_class},
        {"class_order", {"neutral", "positive", "negative"}},
        {"feature_weights", e.feature_weights},
        {"intercept", e.intercept},
        {"surrogate_r2", e.surrogate_r2},
        {"masks_used", e.masks_used},
        {"seed", e.seed},
        {"feature_space", feature_space_to_json(e.feature_space)},
        {"class_weights", e.class_weights},
        {"original_probs", e.original_probs},
    };
}

inline Explanation explanation_from_json(const nlohmann::json& j) {
    Explanation e;
    e.target_class = j.at("target_class").get<int>();
    e.feature_weights = j.at("feature_weights").get<std::vector<double>>();
    e.intercept = j.at("intercept").get<double>();
    e.surrogate_r2 = j.at("surrogate_r2").get<double>();
    e.masks_used = j.at("masks_used").get<int>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.feature_space = feature_space_from_json(j.at("feature_space"));
    e.class_weights = j.at("class_weights").get<std::vector<std::vector<double>>>();
    e.original_probs = j.at("original_probs").get<std::vector<double>>();
    return e;
}

} // namespace memesent
