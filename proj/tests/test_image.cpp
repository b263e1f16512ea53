#include "doctest.h"

#include <cmath>

#include "gazebench/image.hpp"
#include "gazebench/rng.hpp"

using namespace gazebench;
using namespace gazebench::gateway;

namespace {

std::string make_ppm(int w, int h) {
    std::string s = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    s.reserve(s.size() + static_cast<size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            s += static_cast<char>((x * 7 + y * 13) & 0xFF);
            s += static_cast<char>((x * 3) & 0xFF);
            s += static_cast<char>((y * 5) & 0xFF);
        }
    }
    return s;
}

double aspect_deviation(int sw, int sh, int ow, int oh) {
    const double src = static_cast<double>(sw) / sh;
    const double out = static_cast<double>(ow) / oh;
    return std::fabs(out / src - 1.0);
}

}  // namespace

TEST_CASE("pixel-cap dimension arithmetic") {
    CHECK(fit_pixel_cap(896, 896) == Dims{448, 448});
    CHECK(fit_pixel_cap(1280, 720) == Dims{597, 336});
    CHECK(fit_pixel_cap(100, 100) == Dims{100, 100});  // already under the cap
    CHECK(fit_pixel_cap(448, 448) == Dims{448, 448});  // exactly at the cap

    SUBCASE("random dimensions stay under the cap with aspect within 1%") {
        Rng rng(21);
        for (int i = 0; i < 20000; ++i) {
            const int w = 1 + static_cast<int>(rng.below(8192));
            const int h = 1 + static_cast<int>(rng.below(8192));
            const Dims d = fit_pixel_cap(w, h);
            CHECK(static_cast<int64_t>(d.width) * d.height <= kDefaultPixelCap);
            CHECK(d.width >= 1);
            CHECK(d.height >= 1);
            CHECK(aspect_deviation(w, h, d.width, d.height) <= 0.01);
        }
    }
    SUBCASE("tiny caps can make a side vanish") {
        CHECK_THROWS(fit_pixel_cap(10000, 1, 4));
    }
    CHECK_THROWS(fit_pixel_cap(0, 100));
}

TEST_CASE("longest-side scaling") {
    CHECK(fit_longest_side(896, 448, 448) == Dims{448, 224});
    CHECK(fit_longest_side(200, 800, 448) == Dims{112, 448});
    CHECK(fit_longest_side(448, 448, 448) == Dims{448, 448});
    CHECK(fit_longest_side(100, 50, 448) == Dims{448, 224});  // upscale allowed
    Rng rng(22);
    for (int i = 0; i < 2000; ++i) {
        const int w = 1 + static_cast<int>(rng.below(4096));
        const int h = 1 + static_cast<int>(rng.below(4096));
        const Dims d = fit_longest_side(w, h, 448);
        CHECK(std::max(d.width, d.height) == 448);
    }
}

TEST_CASE("prepare_image resizes and re-encodes real rasters") {
    SUBCASE("896x896 lands exactly on the cap") {
        const PreparedImage img = prepare_image(make_ppm(896, 896));
        CHECK(img.width_px == 448);
        CHECK(img.height_px == 448);
        CHECK(img.media_type == "image/png");
        REQUIRE(img.bytes.size() > 8);
        CHECK(static_cast<unsigned char>(img.bytes[0]) == 0x89);
        CHECK(img.bytes.substr(1, 3) == "PNG");
        CHECK(img.source_hash.size() == 64);
    }
    SUBCASE("1280x720 floors to 597x336") {
        const PreparedImage img = prepare_image(make_ppm(1280, 720));
        CHECK(img.width_px == 597);
        CHECK(img.height_px == 336);
    }
    SUBCASE("small images pass through unresized") {
        const PreparedImage img = prepare_image(make_ppm(100, 80));
        CHECK(img.width_px == 100);
        CHECK(img.height_px == 80);
    }
    SUBCASE("longest-side mode for the probe protocol") {
        const PreparedImage img =
            prepare_image(make_ppm(896, 448), kDefaultPixelCap, ResizeMode::longest_side, 448);
        CHECK(img.width_px == 448);
        CHECK(img.height_px == 224);
    }
    SUBCASE("undecodable input throws") {
        CHECK_THROWS(prepare_image("this is not an image"));
        CHECK_THROWS(prepare_image(""));
    }
    SUBCASE("identical sources share a hash; different sources do not") {
        CHECK(prepare_image(make_ppm(64, 64)).source_hash ==
              prepare_image(make_ppm(64, 64)).source_hash);
        CHECK(prepare_image(make_ppm(64, 64)).source_hash !=
              prepare_image(make_ppm(64, 65)).source_hash);
    }
}

TEST_CASE("base64 and data URIs") {
    CHECK(base64_encode("Man") == "TWFu");
    CHECK(base64_encode("Ma") == "TWE=");
    CHECK(base64_encode("M") == "TQ==");
    CHECK(base64_encode("") == "");
    PreparedImage img = prepare_image(make_ppm(16, 16));
    const std::string uri = to_data_uri(img);
    CHECK(uri.rfind("data:image/png;base64,", 0) == 0);
    CHECK(uri.find('\n') == std::string::npos);
}
