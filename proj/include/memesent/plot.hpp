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

// Self-contained raster plotting: line charts (optionally dual-axis),
// histograms and heatmaps, rendered straight into PNG. Text uses an
// embedded 5x7 bitmap font (digits, uppercase, basic punctuation;
// lowercase is folded to uppercase, anything else draws as a box).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "memesent/errors.hpp"
#include "memesent/image.hpp"
#include "memesent/image_io.hpp"

namespace memesent::plot {

using Color = std::array<std::uint8_t, 3>;

inline constexpr Color kBlack = {20, 20, 20};
inline constexpr Color kWhite = {255, 255, 255};
inline constexpr Color kGray = {170, 170, 170};
inline constexpr Color kBlue = {31, 119, 180};
inline constexpr Color kOrange = {255, 127, 14};
inline constexpr Color kGreen = {44, 160, 44};
inline constexpr Color kRed = {214, 39, 40};

namespace detail {

struct Glyph {
    char ch;
    std::array<std::uint8_t, 7> rows;  // 5 LSBs per row
};

inline const std::array<std::uint8_t, 7>* find_glyph(char ch) {
    static const std::vector<Glyph> font = {
        {' ', {0, 0, 0, 0, 0, 0, 0}},
        {'0', {0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110}},
        {'1', {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
        {'2', {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111}},
        {'3', {0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110}},
        {'4', {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010}},
        {'5', {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110}},
        {'6', {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110}},
        {'7', {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000}},
        {'8', {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110}},
        {'9', {0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100}},
        {'A', {0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
        {'B', {0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110}},
        {'C', {0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110}},
        {'D', {0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100}},
        {'E', {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111}},
        {'F', {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000}},
        {'G', {0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111}},
        {'H', {0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
        {'I', {0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
        {'J', {0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100}},
        {'K', {0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001}},
        {'L', {0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111}},
        {'M', {0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001}},
        {'N', {0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001}},
        {'O', {0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110}},
        {'P', {0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000}},
        {'Q', {0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101}},
        {'R', {0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001}},
        {'S', {0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110}},
        {'T', {0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100}},
        {'U', {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110}},
        {'V', {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100}},
        {'W', {0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010}},
        {'X', {0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001}},
        {'Y', {0b10001, 0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100}},
        {'Z', {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111}},
        {'.', {0, 0, 0, 0, 0, 0b00110, 0b00110}},
        {',', {0, 0, 0, 0, 0b00110, 0b00110, 0b01100}},
        {':', {0, 0b00110, 0b00110, 0, 0b00110, 0b00110, 0}},
        {'-', {0, 0, 0, 0b01110, 0, 0, 0}},
        {'+', {0, 0b00100, 0b00100, 0b11111, 0b00100, 0b00100, 0}},
        {'%', {0b11001, 0b11010, 0b00010, 0b00100, 0b01000, 0b01011, 0b10011}},
        {'/', {0b00001, 0b00010, 0b00010, 0b00100, 0b01000, 0b01000, 0b10000}},
        {'(', {0b00010, 0b00100, 0b01000, 0b01000, 0b01000, 0b00100, 0b00010}},
        {')', {0b01000, 0b00100, 0b00010, 0b00010, 0b00010, 0b00100, 0b01000}},
        {'=', {0, 0, 0b11111, 0, 0b11111, 0, 0}},
        {'_', {0, 0, 0, 0, 0, 0, 0b11111}},
        {'\'', {0b00100, 0b00100, 0b01000, 0, 0, 0, 0}},
    };
    static const std::array<std::uint8_t, 7> box = {0b11111, 0b10001, 0b10001, 0b10001,
                                                    0b10001, 0b10001, 0b11111};
    if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
    for (const Glyph& g : font) {
        if (g.ch == ch) return &g.rows;
    }
    return &box;
}

} // namespace detail

class Canvas {
public:
    Canvas(int width, int height, Color background = kWhite) : img_(width, height) {
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) set(x, y, background);
    }

    int width() const { return img_.width; }
    int height() const { return img_.height; }

    void set(int x, int y, Color c) {
        if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
        img_.at(x, y, 0) = c[0];
        img_.at(x, y, 1) = c[1];
        img_.at(x, y, 2) = c[2];
    }

    void fill_rect(int x0, int y0, int x1, int y1, Color c) {
        for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
            for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
    }

    void line(int x0, int y0, int x1, int y1, Color c) {
        const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        for (;;) {
            set(x0, y0, c);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) { err += dy; x0 += sx; }
            if (e2 <= dx) { err += dx; y0 += sy; }
        }
    }

    void text(int x, int y, const std::string& s, Color c, int scale = 1) {
        int cx = x;
        for (char ch : s) {
            const auto* rows = detail::find_glyph(ch);
            for (int r = 0; r < 7; ++r)
                for (int b = 0; b < 5; ++b)
                    if ((*rows)[static_cast<std::size_t>(r)] & (1 << (4 - b)))
                        fill_rect(cx + b * scale, y + r * scale, cx + b * scale + scale - 1,
                                  y + r * scale + scale - 1, c);
            cx += 6 * scale;
        }
    }

    static int text_width(const std::string& s, int scale = 1) {
        return static_cast<int>(s.size()) * 6 * scale;
    }

    void save(const std::string& path) const { write_image(path, img_); }

    const ImageU8& image() const { return img_; }

private:
    ImageU8 img_;
};

inline std::string format_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

struct Series {
    std::string name;
    Color color = kBlue;
    bool right_axis = false;
    std::vector<double> values;  // x is the 1-based index (epoch)
};

/// Line chart with an optional secondary y-axis on the right.
inline void plot_series(const std::string& path, const std::string& title,
                        const std::vector<Series>& series, const std::string& left_label,
                        const std::string& right_label = "") {
    if (series.empty()) throw ContractError("plot_series wants at least one series");
    std::size_t n = 0;
    for (const Series& s : series) {
        if (s.values.empty()) throw ContractError("series '" + s.name + "' is empty");
        n = std::max(n, s.values.size());
    }
    const auto range_of = [&](bool right) {
        double lo = 0, hi = 1;
        bool any = false;
        for (const Series& s : series) {
            if (s.right_axis != right) continue;
            for (double v : s.values) {
                if (!any) { lo = hi = v; any = true; }
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (!any) return std::pair{0.0, 1.0};
        if (hi - lo < 1e-12) { hi += 0.5; lo -= 0.5; }
        const double pad = 0.05 * (hi - lo);
        return std::pair{lo - pad, hi + pad};
    };
    const auto [l_lo, l_hi] = range_of(false);
    const auto [r_lo, r_hi] = range_of(true);
    bool has_right = false;
    for (const Series& s : series) has_right = has_right || s.right_axis;

    const int W = 720, H = 440;
    const int mx0 = 64, mx1 = has_right ? W - 64 : W - 24;
    const int my0 = 40, my1 = H - 64;
    Canvas canvas(W, H);
    canvas.text((W - Canvas::text_width(title)) / 2, 12, title, kBlack);
    canvas.fill_rect(mx0, my1, mx1, my1, kBlack);
    canvas.fill_rect(mx0, my0, mx0, my1, kBlack);
    if (has_right) canvas.fill_rect(mx1, my0, mx1, my1, kBlack);

    const auto x_of = [&](std::size_t i) {
        if (n == 1) return (mx0 + mx1) / 2;
        return mx0 + static_cast<int>(std::lround(static_cast<double>(i) * (mx1 - mx0) /
                                                  static_cast<double>(n - 1)));
    };
    const auto y_of = [&](double v, bool right) {
        const double lo = right ? r_lo : l_lo;
        const double hi = right ? r_hi : l_hi;
        const double t = (v - lo) / (hi - lo);
        return my1 - static_cast<int>(std::lround(t * (my1 - my0)));
    };

    for (int tick = 0; tick <= 4; ++tick) {
        const double tl = l_lo + (l_hi - l_lo) * tick / 4.0;
        const int y = y_of(tl, false);
        canvas.line(mx0 - 3, y, mx0, y, kBlack);
        canvas.text(4, y - 3, format_tick(tl), kBlack);
        if (has_right) {
            const double tr = r_lo + (r_hi - r_lo) * tick / 4.0;
            canvas.line(mx1, y_of(tr, true), mx1 + 3, y_of(tr, true), kBlack);
            canvas.text(mx1 + 6, y_of(tr, true) - 3, format_tick(tr), kBlack);
        }
    }
    const int x_ticks = std::min<std::size_t>(n, 8);
    for (int t = 0; t < x_ticks; ++t) {
        const std::size_t i = x_ticks == 1 ? 0 : t * (n - 1) / (x_ticks - 1);
        const int x = x_of(i);
        canvas.line(x, my1, x, my1 + 3, kBlack);
        canvas.text(x - 3, my1 + 6, std::to_string(i + 1), kBlack);
    }
    canvas.text(mx0, H - 24, "EPOCH", kBlack);
    canvas.text(4, my0 - 16, left_label, kBlack);
    if (has_right && !right_label.empty()) {
        canvas.text(mx1 - Canvas::text_width(right_label) + 56, my0 - 16, right_label, kBlack);
    }

    int legend_x = mx0 + 8;
    for (const Series& s : series) {
        for (std::size_t i = 0; i + 1 < s.values.size(); ++i) {
            canvas.line(x_of(i), y_of(s.values[i], s.right_axis), x_of(i + 1),
                        y_of(s.values[i + 1], s.right_axis), s.color);
        }
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            const int x = x_of(i), y = y_of(s.values[i], s.right_axis);
            canvas.fill_rect(x - 1, y - 1, x + 1, y + 1, s.color);
        }
        canvas.fill_rect(legend_x, my0 - 14, legend_x + 10, my0 - 10, s.color);
        canvas.text(legend_x + 14, my0 - 17, s.name, kBlack);
        legend_x += 20 + Canvas::text_width(s.name);
    }
    canvas.save(path);
}

/// Bar chart over an integer-keyed distribution (caption length -> count).
inline void plot_histogram(const std::string& path, const std::string& title,
                           const std::map<std::size_t, std::size_t>& dist) {
    const int W = 720, H = 440;
    const int mx0 = 56, mx1 = W - 20, my0 = 40, my1 = H - 56;
    Canvas canvas(W, H);
    canvas.text((W - Canvas::text_width(title)) / 2, 12, title, kBlack);
    canvas.fill_rect(mx0, my1, mx1, my1, kBlack);
    canvas.fill_rect(mx0, my0, mx0, my1, kBlack);
    if (dist.empty()) {
        canvas.text(mx0 + 20, (my0 + my1) / 2, "NO DATA", kGray);
        canvas.save(path);
        return;
    }
    const std::size_t max_key = dist.rbegin()->first;
    std::size_t max_count = 1;
    for (const auto& [k, v] : dist) {
        (void)k;
        max_count = std::max(max_count, v);
    }
    const int bins = static_cast<int>(max_key) + 1;
    const double bar_w = static_cast<double>(mx1 - mx0) / bins;
    for (const auto& [k, v] : dist) {
        const int x0 = mx0 + static_cast<int>(k * bar_w);
        const int x1 = mx0 + std::max(static_cast<int>((k + 1) * bar_w) - 1, static_cast<int>(k * bar_w));
        const int h = static_cast<int>(std::lround(static_cast<double>(v) / max_count * (my1 - my0)));
        canvas.fill_rect(x0, my1 - h, x1, my1 - 1, kBlue);
    }
    for (int t = 0; t <= 4; ++t) {
        const double val = static_cast<double>(max_count) * t / 4.0;
        const int y = my1 - static_cast<int>(std::lround(static_cast<double>(t) / 4.0 * (my1 - my0)));
        canvas.line(mx0 - 3, y, mx0, y, kBlack);
        canvas.text(4, y - 3, format_tick(val), kBlack);
    }
    for (int t = 0; t <= 6; ++t) {
        const std::size_t k = max_key * static_cast<std::size_t>(t) / 6;
        const int x = mx0 + static_cast<int>((k + 0.5) * bar_w);
        canvas.line(x, my1, x, my1 + 3, kBlack);
        canvas.text(x - 3, my1 + 6, std::to_string(k), kBlack);
    }
    canvas.text(mx0, H - 24, "CAPTION LENGTH (WORDS)", kBlack);
    canvas.text(4, my0 - 16, "COUNT", kBlack);
    canvas.save(path);
}

/// Heatmap of a square count matrix with per-cell annotations.
inline void plot_heatmap(const std::string& path, const std::string& title,
                         const std::vector<std::vector<std::int64_t>>& matrix,
                         const std::vector<std::string>& labels) {
    const std::size_t n = matrix.size();
    if (n == 0 || labels.size() != n) throw ContractError("heatmap wants a labeled square matrix");
    std::int64_t max_v = 1;
    for (const auto& row : matrix) {
        if (row.size() != n) throw ContractError("heatmap matrix must be square");
        for (std::int64_t v : row) max_v = std::max(max_v, v);
    }
    const int cell = 96, mx0 = 110, my0 = 70;
    const int W = mx0 + cell * static_cast<int>(n) + 30;
    const int H = my0 + cell * static_cast<int>(n) + 40;
    Canvas canvas(W, H);
    canvas.text((W - Canvas::text_width(title)) / 2, 10, title, kBlack);
    canvas.text(mx0, 30, "PREDICTED", kGray);
    for (std::size_t i = 0; i < n; ++i) {
        canvas.text(mx0 + static_cast<int>(i) * cell + 8, my0 - 14, labels[i], kBlack);
        canvas.text(6, my0 + static_cast<int>(i) * cell + cell / 2 - 4, labels[i], kBlack);
        for (std::size_t j = 0; j < n; ++j) {
            const double t = static_cast<double>(matrix[i][j]) / static_cast<double>(max_v);
            const auto chan = [&](double base) {
                return static_cast<std::uint8_t>(std::lround(255 - t * (255 - base)));
            };
            const Color c = {chan(31), chan(119), chan(180)};
            const int x0 = mx0 + static_cast<int>(j) * cell;
            const int y0 = my0 + static_cast<int>(i) * cell;
            canvas.fill_rect(x0, y0, x0 + cell - 2, y0 + cell - 2, c);
            const std::string count = std::to_string(matrix[i][j]);
            const Color text_color = t > 0.55 ? kWhite : kBlack;
            canvas.text(x0 + cell / 2 - Canvas::text_width(count) / 2, y0 + cell / 2 - 4, count,
                        text_color);
        }
    }
    canvas.save(path);
}

} // namespace memesent::plot
