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

// PNG (via zlib) and binary PPM readers/writers. The PNG container is
// implemented here directly: chunk framing, scanline filters, 8-bit
// gray/gray-alpha/RGB/RGBA/palette color types. Interlaced files are
// rejected. Written files are truecolor RGB, filter 0, zlib-compressed.

#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "memesent/errors.hpp"
#include "memesent/image.hpp"

namespace memesent {

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    in.seekg(0, std::ios::end);
    const std::streamoff len = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
    if (len > 0) in.read(reinterpret_cast<char*>(bytes.data()), len);
    if (!in) throw IoError("cannot read file: " + path);
    return bytes;
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write file: " + path);
}

inline std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* data, std::size_t size,
                                              std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    uLongf out_len = static_cast<uLongf>(expected);
    const int rc = ::uncompress(out.data(), &out_len, data, static_cast<uLong>(size));
    if (rc != Z_OK) throw DecodeError("zlib inflate failed (code " + std::to_string(rc) + ")");
    out.resize(out_len);
    return out;
}

inline std::vector<std::uint8_t> zlib_deflate(const std::uint8_t* data, std::size_t size) {
    uLongf bound = ::compressBound(static_cast<uLong>(size));
    std::vector<std::uint8_t> out(bound);
    const int rc = ::compress2(out.data(), &bound, data, static_cast<uLong>(size), 6);
    if (rc != Z_OK) throw IoError("zlib deflate failed (code " + std::to_string(rc) + ")");
    out.resize(bound);
    return out;
}

inline std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline void push_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

inline const std::array<std::uint8_t, 8> kPngSignature = {137, 80, 78, 71, 13, 10, 26, 10};

} // namespace detail

inline bool looks_like_png(const std::vector<std::uint8_t>& bytes) {
    return bytes.size() >= 8 &&
           std::memcmp(bytes.data(), detail::kPngSignature.data(), 8) == 0;
}

/// Decodes an 8-bit non-interlaced PNG to RGB (alpha dropped over black).
inline ImageU8 decode_png(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    using namespace detail;
    if (!looks_like_png(bytes)) throw DecodeError(origin + ": not a PNG");

    std::uint32_t width = 0, height = 0;
    int bit_depth = 0, color_type = 0, interlace = 0;
    std::vector<std::uint8_t> idat;
    std::vector<std::array<std::uint8_t, 3>> palette;
    bool saw_ihdr = false, saw_iend = false;

    std::size_t pos = 8;
    while (pos + 8 <= bytes.size() && !saw_iend) {
        const std::uint32_t len = be32(&bytes[pos]);
        if (pos + 12 + len > bytes.size()) throw DecodeError(origin + ": truncated chunk");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const std::uint8_t* data = &bytes[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw DecodeError(origin + ": bad IHDR");
            width = be32(data);
            height = be32(data + 4);
            bit_depth = data[8];
            color_type = data[9];
            interlace = data[12];
            saw_ihdr = true;
        } else if (std::memcmp(type, "PLTE", 4) == 0) {
            if (len % 3 != 0) throw DecodeError(origin + ": bad PLTE");
            for (std::uint32_t i = 0; i < len; i += 3)
                palette.push_back({data[i], data[i + 1], data[i + 2]});
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr || idat.empty()) throw DecodeError(origin + ": missing IHDR/IDAT");
    if (width == 0 || height == 0) throw DecodeError(origin + ": zero dimensions");
    if (bit_depth != 8) throw DecodeError(origin + ": only 8-bit depth supported");
    if (interlace != 0) throw DecodeError(origin + ": interlaced PNG not supported");

    int samples = 0;
    switch (color_type) {
        case 0: samples = 1; break;  // gray
        case 2: samples = 3; break;  // rgb
        case 3: samples = 1; break;  // palette
        case 4: samples = 2; break;  // gray+alpha
        case 6: samples = 4; break;  // rgba
        default: throw DecodeError(origin + ": unsupported color type");
    }
    if (color_type == 3 && palette.empty()) throw DecodeError(origin + ": palette missing");

    const std::size_t stride = static_cast<std::size_t>(width) * samples;
    const std::size_t raw_size = (stride + 1) * height;
    std::vector<std::uint8_t> raw = zlib_inflate(idat.data(), idat.size(), raw_size);
    if (raw.size() != raw_size) throw DecodeError(origin + ": wrong decompressed size");

    // Undo per-scanline filters in place.
    std::vector<std::uint8_t> prev(stride, 0);
    ImageU8 img(static_cast<int>(width), static_cast<int>(height));
    std::vector<std::uint8_t> line(stride);
    for (std::uint32_t y = 0; y < height; ++y) {
        const std::uint8_t* src = &raw[(stride + 1) * y];
        const int filter = src[0];
        const std::uint8_t* cur = src + 1;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<std::size_t>(samples) ? line[i - samples] : 0;
            const int b = prev[i];
            const int c = i >= static_cast<std::size_t>(samples) ? prev[i - samples] : 0;
            int v = cur[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw DecodeError(origin + ": bad filter type");
            }
            line[i] = static_cast<std::uint8_t>(v & 0xFF);
        }
        for (std::uint32_t x = 0; x < width; ++x) {
            std::uint8_t r = 0, g = 0, b = 0;
            const std::uint8_t* px = &line[static_cast<std::size_t>(x) * samples];
            switch (color_type) {
                case 0: r = g = b = px[0]; break;
                case 2: r = px[0]; g = px[1]; b = px[2]; break;
                case 3: {
                    if (px[0] >= palette.size()) throw DecodeError(origin + ": palette index out of range");
                    const auto& p = palette[px[0]];
                    r = p[0]; g = p[1]; b = p[2];
                    break;
                }
                case 4: r = g = b = px[0]; break;
                case 6: r = px[0]; g = px[1]; b = px[2]; break;
            }
            img.at(static_cast<int>(x), static_cast<int>(y), 0) = r;
            img.at(static_cast<int>(x), static_cast<int>(y), 1) = g;
            img.at(static_cast<int>(x), static_cast<int>(y), 2) = b;
        }
        prev = line;
    }
    return img;
}

inline std::vector<std::uint8_t> encode_png(const ImageU8& img) {
    using namespace detail;
    if (img.empty()) throw ContractError("cannot encode an empty image");

    const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter: none
        const std::uint8_t* row = &img.pixels[static_cast<std::size_t>(y) * stride];
        raw.insert(raw.end(), row, row + stride);
    }
    const std::vector<std::uint8_t> compressed = zlib_deflate(raw.data(), raw.size());

    std::vector<std::uint8_t> out(kPngSignature.begin(), kPngSignature.end());
    const auto chunk = [&out](const char* type, const std::vector<std::uint8_t>& data) {
        push_be32(out, static_cast<std::uint32_t>(data.size()));
        const std::size_t crc_start = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data.begin(), data.end());
        const uLong crc = ::crc32(0L, out.data() + crc_start,
                                  static_cast<uInt>(out.size() - crc_start));
        push_be32(out, static_cast<std::uint32_t>(crc));
    };

    std::vector<std::uint8_t> ihdr;
    push_be32(ihdr, static_cast<std::uint32_t>(img.width));
    push_be32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // truecolor
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter method
    ihdr.push_back(0);   // no interlace
    chunk("IHDR", ihdr);
    chunk("IDAT", compressed);
    chunk("IEND", {});
    return out;
}

inline bool looks_like_ppm(const std::vector<std::uint8_t>& bytes) {
    return bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6';
}

/// Binary PPM (P6), maxval 255.
inline ImageU8 decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    if (!looks_like_ppm(bytes)) throw DecodeError(origin + ": not a binary PPM");
    std::size_t pos = 2;
    const auto next_int = [&]() -> int {
        // skip whitespace and '#' comments
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        int v = 0;
        bool any = false;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            v = v * 10 + (bytes[pos] - '0');
            ++pos;
            any = true;
        }
        if (!any) throw DecodeError(origin + ": malformed PPM header");
        return v;
    };
    const int w = next_int();
    const int h = next_int();
    const int maxval = next_int();
    if (w <= 0 || h <= 0 || maxval != 255) throw DecodeError(origin + ": unsupported PPM");
    ++pos;  // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (bytes.size() < pos + need) throw DecodeError(origin + ": truncated PPM");
    ImageU8 img(w, h);
    std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
              bytes.begin() + static_cast<std::ptrdiff_t>(pos + need), img.pixels.begin());
    return img;
}

inline std::vector<std::uint8_t> encode_ppm(const ImageU8& img) {
    if (img.empty()) throw ContractError("cannot encode an empty image");
    std::string header = "P6\n" + std::to_string(img.width) + " " +
                         std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

/// Reads a PNG or binary PPM, sniffing by content rather than extension.
inline ImageU8 read_image(const std::string& path) {
    const std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
    if (looks_like_png(bytes)) return decode_png(bytes, path);
    if (looks_like_ppm(bytes)) return decode_ppm(bytes, path);
    throw DecodeError(path + ": unrecognized image format (PNG and binary PPM supported)");
}

/// Writes PNG unless the extension is .ppm.
inline void write_image(const std::string& path, const ImageU8& img) {
    const bool ppm = path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0;
    detail::write_file_bytes(path, ppm ? encode_ppm(img) : encode_png(img));
}

} // namespace memesent
