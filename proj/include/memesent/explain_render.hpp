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

// Rendering of explanations.
//
// Image mode: the top-k positive-weight superpixels are tinted green
// (supporting the explained class), the top-k negative ones red (opposing
// it), tint strength proportional to |weight|.
//
// Text mode: an HTML fragment coloring each token by the class it
// contributes to most — orange for positive, green for negative, blue for
// neutral — with opacity proportional to |weight|.
//
// A JSON sidecar with the raw weights is always written.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "memesent/errors.hpp"
#include "memesent/explain.hpp"
#include "memesent/image.hpp"
#include "memesent/image_io.hpp"
#include "memesent/labels.hpp"

namespace memesent {

namespace detail {

struct RankedFeature {
    std::size_t index;
    double weight;
};

/// Indices of the k strongest strictly-positive (or strictly-negative)
/// weights, strongest first.
inline std::vector<RankedFeature> top_signed(const std::vector<double>& weights, int k,
                                             bool positive) {
    std::vector<RankedFeature> ranked;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (positive ? weights[i] > 0 : weights[i] < 0) ranked.push_back({i, weights[i]});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [&](const RankedFeature& a, const RankedFeature& b) {
        return std::abs(a.weight) > std::abs(b.weight);
    });
    if (ranked.size() > static_cast<std::size_t>(k)) ranked.resize(static_cast<std::size_t>(k));
    return ranked;
}

inline std::string html_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

} // namespace detail

/// Support/oppose overlay for an image explanation.
inline ImageU8 render_image_overlay(const Explanation& explanation, const ImageU8& image,
                                    int top_k = 5) {
    const FeatureSpace& fs = explanation.feature_space;
    if (fs.kind != FeatureSpace::Kind::kSuperpixels) {
        throw ContractError("image overlay wants a superpixel explanation");
    }
    if (image.height != fs.height || image.width != fs.width) {
        throw ContractError("image does not match the explanation's feature space");
    }
    const auto positives = detail::top_signed(explanation.feature_weights, top_k, true);
    const auto negatives = detail::top_signed(explanation.feature_weights, top_k, false);

    double max_abs = 0;
    for (const auto& f : positives) max_abs = std::max(max_abs, std::abs(f.weight));
    for (const auto& f : negatives) max_abs = std::max(max_abs, std::abs(f.weight));

    // alpha per selected segment, signed by support/oppose
    std::vector<double> alpha(static_cast<std::size_t>(fs.count), 0.0);
    std::vector<int> sign(static_cast<std::size_t>(fs.count), 0);
    for (const auto& f : positives) {
        alpha[f.index] = 0.6 * std::abs(f.weight) / max_abs;
        sign[f.index] = 1;
    }
    for (const auto& f : negatives) {
        alpha[f.index] = 0.6 * std::abs(f.weight) / max_abs;
        sign[f.index] = -1;
    }

    ImageU8 out = image;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const auto seg = static_cast<std::size_t>(
                fs.segment_map[static_cast<std::size_t>(y) * image.width + x]);
            if (sign[seg] == 0) continue;
            const double a = alpha[seg];
            const std::array<double, 3> tint = sign[seg] > 0
                                                   ? std::array<double, 3>{0, 200, 0}
                                                   : std::array<double, 3>{220, 0, 0};
            for (int c = 0; c < 3; ++c) {
                const double blended = (1.0 - a) * image.at(x, y, c) + a * tint[static_cast<std::size_t>(c)];
                out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(blended));
            }
        }
    }
    return out;
}

/// Per-token HTML fragment. Each token is colored by the class whose
/// surrogate gives it the largest positive coefficient; tokens supporting
/// no class stay uncolored.
inline std::string render_token_html(const Explanation& explanation) {
    const FeatureSpace& fs = explanation.feature_space;
    if (fs.kind != FeatureSpace::Kind::kTokens) {
        throw ContractError("token rendering wants a token explanation");
    }
    static const char* kClassColor[kNumClasses] = {
        "60,120,255",  // neutral: blue
        "255,165,0",   // positive: orange
        "0,160,60",    // negative: green
    };

    double max_abs = 0;
    for (const auto& class_row : explanation.class_weights) {
        for (double w : class_row) max_abs = std::max(max_abs, std::abs(w));
    }

    std::ostringstream out;
    out << "<div class=\"lime-tokens\" data-target-class=\""
        << label_name(label_from_index(explanation.target_class)) << "\">\n";
    for (std::size_t t = 0; t < fs.tokens.size(); ++t) {
        int best_class = -1;
        double best_weight = 0;
        for (std::size_t c = 0; c < explanation.class_weights.size(); ++c) {
            const double w = explanation.class_weights[c][t];
            if (w > best_weight) {
                best_weight = w;
                best_class = static_cast<int>(c);
            }
        }
        if (best_class < 0 || max_abs <= 0) {
            out << "  <span>" << detail::html_escape(fs.tokens[t]) << "</span>\n";
            continue;
        }
        const double opacity = std::min(1.0, std::abs(best_weight) / max_abs);
        char opacity_str[16];
        std::snprintf(opacity_str, sizeof(opacity_str), "%.3f", opacity);
        out << "  <span class=\"" << label_name(label_from_index(best_class))
            << "\" style=\"background-color: rgba(" << kClassColor[best_class] << ","
            << opacity_str << ")\">" << detail::html_escape(fs.tokens[t]) << "</span>\n";
    }
    out << "</div>\n";
    return out.str();
}

struct RenderedPaths {
    std::string overlay_png;
    std::string token_html;
    std::string weights_json;
};

/// Writes every artifact the explanation supports next to `output_stem`:
/// <stem>.png for superpixel explanations, <stem>.html for token
/// explanations, and always <stem>.json with the raw weights.
inline RenderedPaths render_explanation(const Explanation& explanation, const ImageU8* image,
                                        const std::string& output_stem, int top_k = 5) {
    RenderedPaths paths;
    if (explanation.feature_space.kind == FeatureSpace::Kind::kSuperpixels) {
        if (image == nullptr) throw ContractError("image explanation needs the sample image");
        paths.overlay_png = output_stem + ".png";
        write_image(paths.overlay_png, render_image_overlay(explanation, *image, top_k));
    } else {
        paths.token_html = output_stem + ".html";
        std::ofstream out(paths.token_html, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write token view: " + paths.token_html);
        out << render_token_html(explanation);
    }
    paths.weights_json = output_stem + ".json";
    std::ofstream out(paths.weights_json, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write explanation json: " + paths.weights_json);
    out << explanation_to_json(explanation).dump(2) << "\n";
    return paths;
}

} // namespace memesent
