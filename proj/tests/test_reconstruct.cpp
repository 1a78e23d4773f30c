#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "semcom/reconstruct.hpp"

using namespace semcom;

namespace {

std::vector<std::string> cat_names(int count) {
    std::vector<std::string> names;
    for (int i = 0; i < count; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "cat%02d", i);
        names.push_back(buf);
    }
    return names;
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

bool pixel_is(const ImageRaster& img, int x, int y, const std::array<uint8_t, 3>& c) {
    const uint8_t* px = img.at(unsigned(x), unsigned(y));
    return px[0] == c[0] && px[1] == c[1] && px[2] == c[2];
}

// Octagonal region, fill factor well above one half of its bbox.
const std::vector<Vertex> kOctagon{{8, 4},  {16, 4},  {18, 6}, {18, 14},
                                   {16, 16}, {8, 16}, {6, 14}, {6, 6}};

struct Scene {
    AsegMap aseg;
    BsegMap bseg;
    ImageRaster gt;
    std::vector<SubImage> crops;
    Palette palette = Palette::from_names(cat_names(5));
};

// Ground truth composed by the renderer's own stage rules plus a deterministic
// in-mask texture, which is exactly what the sub-image crops carry back.
Scene octagon_scene() {
    Scene s;
    s.aseg.width = 24;
    s.aseg.height = 20;
    s.aseg.class_grid.assign(24 * 20, kBackgroundClass);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 24; ++x)
            if (point_in_polygon(x + 0.5, y + 0.5, kOctagon)) s.aseg.class_grid[y * 24 + x] = 2;
    s.aseg.instances.push_back({1, 2, {6, 4, 12, 12}});
    s.bseg.width = 24;
    s.bseg.height = 20;
    s.bseg.regions.push_back({1, 2, kOctagon});

    ReceivedSemantics upto_bseg;
    upto_bseg.text = IsText{"a scene with cat02"};
    upto_bseg.aseg = s.aseg;
    upto_bseg.bseg = s.bseg;
    s.gt = render_reference(upto_bseg, 24, 20, s.palette);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 24; ++x)
            if (point_in_polygon(x + 0.5, y + 0.5, kOctagon)) {
                uint8_t* px = s.gt.at(unsigned(x), unsigned(y));
                for (int c = 0; c < 3; ++c) {
                    const int delta = (x * 31 + y * 17 + c * 7) % 13 - 6;
                    px[c] = uint8_t(std::clamp(int(px[c]) + delta, 0, 255));
                }
            }
    s.crops = extract_subimages(s.gt, s.aseg, s.bseg);
    return s;
}

}  // namespace

TEST_CASE("palette colors are stable, seeded, and far from the background") {
    auto names = cat_names(80);
    auto p = Palette::from_names(names);
    auto again = Palette::from_names(names);
    CHECK(p.colors == again.colors);
    auto other = Palette::from_names(names, kPaletteSeed + 1);
    CHECK(p.colors != other.colors);
    CHECK(p.color(kBackgroundClass) == kBackgroundColor);
    CHECK_THROWS_AS(p.color(200), InvariantViolation);
    for (uint8_t id = 0; id < 80; ++id) {
        auto c = p.color(id);
        long dist = 0;
        for (int ch = 0; ch < 3; ++ch) {
            const long d = long(c[ch]) - 128;
            dist += d * d;
        }
        CHECK(dist >= 2000);
    }
}

TEST_CASE("text alone renders a uniform background canvas") {
    ReceivedSemantics r;
    r.text = IsText{"a scene with nothing"};
    auto img = render_reference(r, 16, 12, Palette::from_names(cat_names(1)));
    CHECK(img.width == 16);
    CHECK(img.height == 12);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 16; ++x) CHECK(pixel_is(img, x, y, kBackgroundColor));
}

TEST_CASE("canvas dimensions resolve from arguments or elements") {
    auto scene = octagon_scene();
    ReceivedSemantics r;
    r.aseg = scene.aseg;
    auto img = render_reference(r, 0, 0, scene.palette);
    CHECK(img.width == 24);
    CHECK(img.height == 20);
    CHECK_THROWS_AS(render_reference(r, 25, 20, scene.palette), DimensionMismatch);

    ReceivedSemantics empty;
    empty.text = IsText{"x"};
    CHECK_THROWS_AS(render_reference(empty, 0, 0, scene.palette), DimensionUnknown);

    ReceivedSemantics disagreeing;
    disagreeing.aseg = scene.aseg;
    disagreeing.bseg = scene.bseg;
    disagreeing.bseg->width = 23;
    CHECK_THROWS_AS(render_reference(disagreeing, 0, 0, scene.palette), DimensionMismatch);
}

TEST_CASE("a full-frame instance paints the whole canvas its category color") {
    ReceivedSemantics r;
    r.aseg = AsegMap{8, 6, {{1, 0, {0, 0, 8, 6}}}, std::vector<uint8_t>(48, 0)};
    auto palette = Palette::from_names(cat_names(1));
    auto img = render_reference(r, 8, 6, palette);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 8; ++x) CHECK(pixel_is(img, x, y, palette.color(0)));
}

TEST_CASE("bbox fills apply in instance order") {
    ReceivedSemantics r;
    r.aseg = AsegMap{10, 6, {{1, 0, {0, 0, 6, 6}}, {2, 1, {3, 0, 6, 6}}},
                     std::vector<uint8_t>(60, kBackgroundClass)};
    auto palette = Palette::from_names(cat_names(2));
    auto img = render_reference(r, 10, 6, palette);
    CHECK(pixel_is(img, 1, 2, palette.color(0)));
    CHECK(pixel_is(img, 4, 2, palette.color(1)));  // overlap goes to the later instance
    CHECK(pixel_is(img, 7, 2, palette.color(1)));
    CHECK(pixel_is(img, 9, 2, kBackgroundColor));
}

TEST_CASE("contours replace bbox fills and match the point-in-polygon oracle") {
    auto scene = octagon_scene();
    ReceivedSemantics r;
    r.aseg = scene.aseg;
    r.bseg = scene.bseg;
    auto img = render_reference(r, 24, 20, scene.palette);
    const auto fill = scene.palette.color(2);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 24; ++x) {
            const bool inside = point_in_polygon(x + 0.5, y + 0.5, kOctagon);
            CHECK(pixel_is(img, x, y, inside ? fill : kBackgroundColor));
        }
    CHECK(pixel_is(img, 6, 4, kBackgroundColor));  // in the bbox, outside the polygon
}

TEST_CASE("each delivered stage refines the render down to an exact copy") {
    auto scene = octagon_scene();
    ReceivedSemantics r;
    r.text = IsText{"a scene with cat02"};
    std::vector<double> errors;
    errors.push_back(mse(scene.gt, render_reference(r, 24, 20, scene.palette)));
    r.aseg = scene.aseg;
    errors.push_back(mse(scene.gt, render_reference(r, 24, 20, scene.palette)));
    r.bseg = scene.bseg;
    errors.push_back(mse(scene.gt, render_reference(r, 24, 20, scene.palette)));
    r.crops = scene.crops;
    auto full = render_reference(r, 24, 20, scene.palette);
    errors.push_back(mse(scene.gt, full));
    for (size_t i = 1; i < errors.size(); ++i) CHECK(errors[i] <= errors[i - 1]);
    CHECK(errors.front() > 0.0);
    CHECK(errors.back() == 0.0);
    CHECK(full == scene.gt);
}

TEST_CASE("crops without a matching contour paste their whole bbox") {
    ReceivedSemantics r;
    SubImage crop;
    crop.instance_id = 9;
    crop.bbox = {2, 1, 2, 2};
    crop.pixels = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120};
    r.aseg = AsegMap{8, 6, {}, std::vector<uint8_t>(48, kBackgroundClass)};
    r.crops = std::vector<SubImage>{crop};
    auto img = render_reference(r, 8, 6, Palette::from_names(cat_names(1)));
    CHECK(pixel_is(img, 2, 1, {10, 20, 30}));
    CHECK(pixel_is(img, 3, 1, {40, 50, 60}));
    CHECK(pixel_is(img, 2, 2, {70, 80, 90}));
    CHECK(pixel_is(img, 3, 2, {100, 110, 120}));
    CHECK(pixel_is(img, 4, 1, kBackgroundColor));
}

TEST_CASE("the external bridge round-trips files, status codes, and timeouts") {
    namespace fs = std::filesystem;
    auto scene = octagon_scene();
    ReceivedSemantics r = {IsText{"a scene with cat02"}, scene.aseg, scene.bseg, scene.crops};
    const fs::path dir = "bridge_scratch";
    fs::remove_all(dir);
    fs::create_directories(dir);

    write_ppm(scene.gt, (dir / "prepared.ppm").string());
    {
        std::ofstream script(dir / "copy.sh");
        script << "cp " << (dir / "prepared.ppm").string() << " \"$1/response/image.ppm\"\n";
    }
    BridgeConfig ok{"sh " + (dir / "copy.sh").string(), 10.0, 42};
    auto out = reconstruct_external(r, 24, 20, (dir / "wd_ok").string(), ok);
    CHECK(out == scene.gt);
    CHECK(fs::exists(dir / "wd_ok" / "request" / "manifest.json"));
    CHECK(fs::exists(dir / "wd_ok" / "request" / "text.bin"));
    CHECK(fs::exists(dir / "wd_ok" / "request" / "aseg.bin"));
    CHECK(fs::exists(dir / "wd_ok" / "request" / "bseg.bin"));
    CHECK(fs::exists(dir / "wd_ok" / "request" / "simg.bin"));

    BridgeConfig failing{"false", 10.0, 0};
    CHECK_THROWS_AS(reconstruct_external(r, 24, 20, (dir / "wd_fail").string(), failing),
                    ExternalToolFailure);

    BridgeConfig silent{"true", 10.0, 0};
    CHECK_THROWS_AS(reconstruct_external(r, 24, 20, (dir / "wd_none").string(), silent),
                    BadResponse);

    write_ppm(ImageRaster::filled(5, 5, 0, 0, 0), (dir / "small.ppm").string());
    {
        std::ofstream script(dir / "wrong.sh");
        script << "cp " << (dir / "small.ppm").string() << " \"$1/response/image.ppm\"\n";
    }
    BridgeConfig wrong{"sh " + (dir / "wrong.sh").string(), 10.0, 0};
    CHECK_THROWS_AS(reconstruct_external(r, 24, 20, (dir / "wd_wrong").string(), wrong),
                    BadResponse);

    {
        std::ofstream script(dir / "slow.sh");
        script << "sleep 3\n";
    }
    BridgeConfig slow{"sh " + (dir / "slow.sh").string(), 0.3, 0};
    CHECK_THROWS_AS(reconstruct_external(r, 24, 20, (dir / "wd_slow").string(), slow), Timeout);

    fs::remove_all(dir);
}
