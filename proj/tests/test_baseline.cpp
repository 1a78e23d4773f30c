#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "semcom/baseline.hpp"
#include "semcom/rng.hpp"

using namespace semcom;

namespace {

ImageRaster noise_image(uint16_t w, uint16_t h, uint64_t seed) {
    Rng rng(seed);
    ImageRaster img;
    img.width = w;
    img.height = h;
    img.pixels.resize(size_t(w) * h * 3);
    for (auto& p : img.pixels) p = uint8_t(rng.uniform_int(0, 255));
    return img;
}

ImageRaster gray_gradient(uint16_t w, uint16_t h) {
    ImageRaster img;
    img.width = w;
    img.height = h;
    img.pixels.resize(size_t(w) * h * 3);
    for (unsigned y = 0; y < h; ++y)
        for (unsigned x = 0; x < w; ++x) {
            uint8_t v = uint8_t((x * 255u) / (w > 1 ? w - 1 : 1));
            uint8_t* px = img.at(x, y);
            px[0] = px[1] = px[2] = v;
        }
    return img;
}

double mse(const ImageRaster& a, const ImageRaster& b) {
    REQUIRE(a.width == b.width);
    REQUIRE(a.height == b.height);
    double sum = 0.0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = double(a.pixels[i]) - double(b.pixels[i]);
        sum += d * d;
    }
    return sum / double(a.pixels.size());
}

}  // namespace

TEST_CASE("scheme names parse both ways") {
    for (auto s : {Scheme::DIGITAL, Scheme::DIGITAL_KNOWLEDGE, Scheme::ISC_KNOWLEDGE,
                   Scheme::MULTIRATE})
        CHECK(parse_scheme(to_string(s)) == s);
    CHECK_THROWS_AS(parse_scheme("analog"), UnknownScheme);
}

TEST_CASE("configured element sizes come from the model except sub-images") {
    SizeModel model;
    CHECK(element_configured_size(ElementKind::TEXT, 57, model) == doctest::Approx(200.0));
    CHECK(element_configured_size(ElementKind::ASEG, 3000, model) == doctest::Approx(1952.09));
    CHECK(element_configured_size(ElementKind::BSEG, 12, model) == doctest::Approx(2650.29));
    CHECK(element_configured_size(ElementKind::SIMG, 1234, model) == doctest::Approx(1234.0));
    auto hook = configured_size_hook(model);
    CHECK(hook(ElementKind::ASEG, 999) == doctest::Approx(1952.09));
}

TEST_CASE("per-task scheme costs match the configured model") {
    SizeModel model;
    for (auto task : {TaskKind::CAPTION, TaskKind::SEGMENTATION, TaskKind::RECONSTRUCTION})
        CHECK(scheme_task_size(Scheme::DIGITAL, task, model) == doctest::Approx(5761.12));
    CHECK(scheme_task_size(Scheme::DIGITAL_KNOWLEDGE, TaskKind::CAPTION, model) ==
          doctest::Approx(4684.57));
    CHECK(scheme_task_size(Scheme::DIGITAL_KNOWLEDGE, TaskKind::SEGMENTATION, model) ==
          doctest::Approx(5761.12));
    CHECK(scheme_task_size(Scheme::ISC_KNOWLEDGE, TaskKind::CAPTION, model) ==
          doctest::Approx(200.0));
    CHECK(scheme_task_size(Scheme::ISC_KNOWLEDGE, TaskKind::SEGMENTATION, model) ==
          doctest::Approx(1952.09));
    CHECK(scheme_task_size(Scheme::ISC_KNOWLEDGE, TaskKind::RECONSTRUCTION, model) ==
          doctest::Approx(2850.29));
    CHECK(scheme_task_size(Scheme::MULTIRATE, TaskKind::CAPTION, model) == doctest::Approx(200.0));
    CHECK(scheme_task_size(Scheme::MULTIRATE, TaskKind::SEGMENTATION, model) ==
          doctest::Approx(2152.09));
    CHECK(scheme_task_size(Scheme::MULTIRATE, TaskKind::RECONSTRUCTION, model) ==
          doctest::Approx(2850.29));
}

TEST_CASE("uniform gray images survive any quality setting exactly") {
    for (int q : {1, 37, 100})
        for (uint8_t g : {uint8_t(0), uint8_t(77), uint8_t(128), uint8_t(255)}) {
            auto img = ImageRaster::filled(37, 23, g, g, g);
            auto decoded = dct_codec_decode(dct_codec_encode(img, q));
            CHECK(decoded == img);
        }
}

TEST_CASE("encoded size shrinks as quality drops") {
    auto img = noise_image(64, 64, 7);
    size_t previous = 0;
    for (int q : {1, 30, 60, 90}) {
        const size_t size = dct_codec_encode(img, q).size();
        CHECK(size > previous);
        previous = size;
    }
}

TEST_CASE("higher quality reconstructs more faithfully") {
    for (uint64_t seed : {1u, 2u}) {
        auto img = noise_image(48, 48, seed);
        const double coarse = mse(img, dct_codec_decode(dct_codec_encode(img, 1)));
        const double fine = mse(img, dct_codec_decode(dct_codec_encode(img, 90)));
        CHECK(fine < coarse);
    }
    auto smooth = gray_gradient(64, 32);
    const double near_lossless = mse(smooth, dct_codec_decode(dct_codec_encode(smooth, 100)));
    CHECK(10.0 * std::log10(255.0 * 255.0 / (near_lossless + 1e-12)) > 40.0);
}

TEST_CASE("round trips preserve dimensions for awkward sizes") {
    for (auto [w, h] : {std::pair<uint16_t, uint16_t>{1, 1}, {7, 5}, {8, 8}, {37, 23}, {65, 9}}) {
        auto img = noise_image(w, h, w * 100u + h);
        auto decoded = dct_codec_decode(dct_codec_encode(img, 50));
        CHECK(decoded.width == w);
        CHECK(decoded.height == h);
        CHECK(decoded.valid());
    }
}

TEST_CASE("encoding is deterministic") {
    auto img = noise_image(32, 32, 5);
    CHECK(dct_codec_encode(img, 42) == dct_codec_encode(img, 42));
}

TEST_CASE("encoder rejects invalid input") {
    auto img = noise_image(16, 16, 1);
    CHECK_THROWS_AS(dct_codec_encode(img, 0), InvariantViolation);
    CHECK_THROWS_AS(dct_codec_encode(img, 101), InvariantViolation);
    ImageRaster broken;
    broken.width = 4;
    broken.height = 4;
    broken.pixels.resize(5);
    CHECK_THROWS_AS(dct_codec_encode(broken, 50), InvariantViolation);
}

TEST_CASE("decoder rejects malformed headers and tails") {
    auto good = dct_codec_encode(noise_image(16, 16, 2), 40);
    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(dct_codec_decode(bad_magic), MalformedBitstream);
    auto bad_q = good;
    bad_q[8] = 0;
    CHECK_THROWS_AS(dct_codec_decode(bad_q), MalformedBitstream);
    bad_q[8] = 101;
    CHECK_THROWS_AS(dct_codec_decode(bad_q), MalformedBitstream);
    auto zero_dim = good;
    zero_dim[4] = zero_dim[5] = 0;
    CHECK_THROWS_AS(dct_codec_decode(zero_dim), MalformedBitstream);
    auto trailing = good;
    trailing.push_back(0);
    CHECK_THROWS_AS(dct_codec_decode(trailing), MalformedBitstream);
    CHECK_THROWS_AS(dct_codec_decode({}), MalformedBitstream);
    CHECK_THROWS_AS(dct_codec_decode({'D', 'C', 'T', '1'}), MalformedBitstream);
}

TEST_CASE("every strict prefix of a valid stream is rejected") {
    auto good = dct_codec_encode(noise_image(8, 8, 3), 60);
    for (size_t len = 0; len < good.size(); ++len) {
        std::vector<uint8_t> prefix(good.begin(), good.begin() + long(len));
        CHECK_THROWS_AS(dct_codec_decode(prefix), MalformedBitstream);
    }
}

TEST_CASE("fuzzed decode inputs never crash") {
    Rng rng(99);
    int survived = 0;
    for (int round = 0; round < 2000; ++round) {
        std::vector<uint8_t> junk(rng.uniform_int(0, 300));
        for (auto& b : junk) b = uint8_t(rng.uniform_int(0, 255));
        try {
            auto img = dct_codec_decode(junk);
            CHECK(img.valid());
            ++survived;
        } catch (const MalformedBitstream&) {
        }
    }
    CHECK(survived < 2000);  // junk essentially never parses

    auto good = dct_codec_encode(noise_image(24, 24, 4), 55);
    for (int round = 0; round < 500; ++round) {
        auto corrupt = good;
        corrupt[rng.uniform_int(0, corrupt.size() - 1)] ^= uint8_t(1u << rng.uniform_int(0, 7));
        try {
            auto img = dct_codec_decode(corrupt);
            CHECK(img.valid());
        } catch (const MalformedBitstream&) {
        }
    }
}
