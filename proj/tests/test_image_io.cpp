#include <doctest.h>

#include <cstring>
#include <vector>

#include "memesent/image.hpp"
#include "memesent/image_io.hpp"
#include "test_util.hpp"

using namespace memesent;
using test_util::TempDir;

namespace {

// Minimal PNG writer for arbitrary color types, independent of encode_png,
// used to exercise the decoder's non-RGB paths.
std::vector<std::uint8_t> raw_png(std::uint32_t w, std::uint32_t h, int color_type,
                                  const std::vector<std::uint8_t>& scanline_samples,
                                  const std::vector<std::uint8_t>& plte = {}) {
    std::vector<std::uint8_t> out = {137, 80, 78, 71, 13, 10, 26, 10};
    const auto be32 = [&out](std::uint32_t v) {
        out.push_back(static_cast<std::uint8_t>(v >> 24));
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v));
    };
    const auto chunk = [&](const char* type, const std::vector<std::uint8_t>& data) {
        be32(static_cast<std::uint32_t>(data.size()));
        const std::size_t start = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data.begin(), data.end());
        const uLong crc = ::crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
        be32(static_cast<std::uint32_t>(crc));
    };
    std::vector<std::uint8_t> ihdr;
    for (std::uint32_t v : {w, h}) {
        ihdr.push_back(static_cast<std::uint8_t>(v >> 24));
        ihdr.push_back(static_cast<std::uint8_t>(v >> 16));
        ihdr.push_back(static_cast<std::uint8_t>(v >> 8));
        ihdr.push_back(static_cast<std::uint8_t>(v));
    }
    ihdr.push_back(8);
    ihdr.push_back(static_cast<std::uint8_t>(color_type));
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    chunk("IHDR", ihdr);
    if (!plte.empty()) chunk("PLTE", plte);
    uLongf bound = ::compressBound(static_cast<uLong>(scanline_samples.size()));
    std::vector<std::uint8_t> comp(bound);
    REQUIRE(::compress2(comp.data(), &bound, scanline_samples.data(),
                        static_cast<uLong>(scanline_samples.size()), 6) == Z_OK);
    comp.resize(bound);
    chunk("IDAT", comp);
    chunk("IEND", {});
    return out;
}

} // namespace

TEST_SUITE("image_io") {

TEST_CASE("png round trip is lossless") {
    const ImageU8 img = test_util::noise_image(37, 23, 5);
    const ImageU8 back = decode_png(encode_png(img), "mem");
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.pixels == img.pixels);
}

TEST_CASE("png decodes grayscale") {
    // 2x2 gray, one filter byte per row
    const std::vector<std::uint8_t> raw = {0, 10, 20, 0, 30, 40};
    const ImageU8 img = decode_png(raw_png(2, 2, 0, raw), "gray");
    CHECK(img.at(0, 0, 0) == 10);
    CHECK(img.at(0, 0, 1) == 10);
    CHECK(img.at(1, 1, 2) == 40);
}

TEST_CASE("png decodes rgba dropping alpha") {
    const std::vector<std::uint8_t> raw = {0, 1, 2, 3, 255, 4, 5, 6, 0};
    const ImageU8 img = decode_png(raw_png(2, 1, 6, raw), "rgba");
    CHECK(img.at(0, 0, 0) == 1);
    CHECK(img.at(1, 0, 2) == 6);
}

TEST_CASE("png decodes palette") {
    const std::vector<std::uint8_t> plte = {255, 0, 0, 0, 255, 0};
    const std::vector<std::uint8_t> raw = {0, 0, 1};
    const ImageU8 img = decode_png(raw_png(2, 1, 3, raw, plte), "palette");
    CHECK(img.at(0, 0, 0) == 255);
    CHECK(img.at(1, 0, 1) == 255);
}

TEST_CASE("png filters reconstruct") {
    // Row 0 uses Sub (1), row 1 uses Up (2): values chosen by hand.
    // Row 0 actual: (10,10,10), (20,20,20) -> sub deltas (10,10,10)
    // Row 1 actual: (15,15,15), (25,25,25) -> up deltas (5,5,5)
    const std::vector<std::uint8_t> raw = {1, 10, 10, 10, 10, 10, 10,
                                           2, 5, 5, 5, 5, 5, 5};
    const ImageU8 img = decode_png(raw_png(2, 2, 2, raw), "filters");
    CHECK(img.at(0, 0, 0) == 10);
    CHECK(img.at(1, 0, 0) == 20);
    CHECK(img.at(0, 1, 0) == 15);
    CHECK(img.at(1, 1, 0) == 25);
}

TEST_CASE("garbage bytes raise DecodeError with origin") {
    const std::vector<std::uint8_t> junk = {1, 2, 3, 4};
    CHECK_THROWS_WITH_AS(decode_png(junk, "junk.bin"), doctest::Contains("junk.bin"),
                         DecodeError);
}

TEST_CASE("ppm round trip") {
    const ImageU8 img = test_util::noise_image(9, 4, 11);
    const ImageU8 back = decode_ppm(encode_ppm(img), "mem");
    CHECK(back.pixels == img.pixels);
}

TEST_CASE("read_image sniffs content not extension") {
    TempDir dir("imgio");
    const ImageU8 img = test_util::solid_image(4, 4, 1, 2, 3);
    const std::string path = dir.file("actually_png.ppm");
    detail::write_file_bytes(path, encode_png(img));
    const ImageU8 back = read_image(path);
    CHECK(back.pixels == img.pixels);
    CHECK_THROWS_AS(read_image(dir.file("missing.png")), IoError);
}

TEST_CASE("resize shapes and constants") {
    ImageTensor t(3, 448, 448, 0.5);
    const ImageTensor small = resize_bilinear(t, 224, 224);
    CHECK(small.channels == 3);
    CHECK(small.height == 224);
    CHECK(small.width == 224);
    for (double v : small.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));

    const ImageTensor same = resize_bilinear(t, 448, 448);
    CHECK(same.data == t.data);
}

TEST_CASE("resize interpolates between pixels") {
    ImageTensor t(1, 1, 2);
    t.at(0, 0, 0) = 0.0;
    t.at(0, 0, 1) = 1.0;
    const ImageTensor wide = resize_bilinear(t, 1, 4);
    // centers at src coords -0.25, 0.25, 0.75, 1.25 (clamped)
    CHECK(wide.at(0, 0, 0) == doctest::Approx(0.0));
    CHECK(wide.at(0, 0, 1) == doctest::Approx(0.25));
    CHECK(wide.at(0, 0, 2) == doctest::Approx(0.75));
    CHECK(wide.at(0, 0, 3) == doctest::Approx(1.0));
}

} // TEST_SUITE
