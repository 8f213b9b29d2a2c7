#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "synthetic.hpp"
#include "trajex/image.hpp"

using namespace trajex;

namespace {

// Independent reference resampler, same pixel-center convention, written
// point-by-point without the row/column factorization of the implementation.
double reference_resample_at(const std::vector<float>& src, int sw, int sh, int dw, int dh,
                             int x, int y) {
    double sx = std::clamp((x + 0.5) * (static_cast<double>(sw) / dw) - 0.5, 0.0,
                           static_cast<double>(sw - 1));
    double sy = std::clamp((y + 0.5) * (static_cast<double>(sh) / dh) - 0.5, 0.0,
                           static_cast<double>(sh - 1));
    return bilinear_sample(src, sw, sh, sx, sy);
}

Frame make_frame(int w, int h, std::vector<float> gray) {
    Frame f;
    f.width = w;
    f.height = h;
    f.gray = std::move(gray);
    return f;
}

}  // namespace

TEST_CASE("to_grayscale weight constants") {
    CHECK(luminance(1, 1, 1) == Catch::Approx(1.0));
    CHECK(luminance(0, 0, 0) == 0.0f);
    CHECK(luminance(1, 0, 0) == Catch::Approx(0.299));
    CHECK(luminance(0, 1, 0) == Catch::Approx(0.587));
    CHECK(luminance(0, 0, 1) == Catch::Approx(0.114));
}

TEST_CASE("to_grayscale bounded by channel extremes") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<float> rgb(300);
    for (auto& v : rgb) v = u(rng);
    auto gray = to_grayscale(rgb);
    REQUIRE(gray.size() == 100);
    for (size_t i = 0; i < gray.size(); ++i) {
        float lo = std::min({rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]});
        float hi = std::max({rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]});
        CHECK(gray[i] >= lo - 1e-6f);
        CHECK(gray[i] <= hi + 1e-6f);
    }
}

TEST_CASE("resize_bilinear rejects sub-2x2 targets") {
    Frame f = make_frame(2, 2, {0, 1, 1, 0});
    CHECK_THROWS_AS(resize_bilinear(f, 1, 1), Error);
}

TEST_CASE("resize_bilinear identity is bitwise") {
    Frame f = make_frame(2, 2, {0, 1, 1, 0});
    Frame r = resize_bilinear(f, 2, 2);
    CHECK(r.gray == f.gray);
}

TEST_CASE("resize_bilinear separable vertical gradient") {
    // rows [0,0] and [1,1] stretched to 2x4: columns equal, graded downward.
    Frame f = make_frame(2, 2, {0, 0, 1, 1});
    Frame r = resize_bilinear(f, 2, 4);
    REQUIRE(r.width == 2);
    REQUIRE(r.height == 4);
    for (int y = 0; y < 4; ++y) CHECK(r.at(0, y) == r.at(1, y));
    for (int y = 1; y < 4; ++y) CHECK(r.at(0, y) >= r.at(0, y - 1));
    CHECK(r.at(0, 0) == 0.0f);
    CHECK(r.at(0, 3) == 1.0f);
    CHECK(r.at(0, 1) == Catch::Approx(0.25));
    CHECK(r.at(0, 2) == Catch::Approx(0.75));
}

TEST_CASE("resize of constant frame stays constant") {
    Frame f = make_frame(5, 7, std::vector<float>(35, 0.37f));
    Frame r = resize_bilinear(f, 13, 3);
    for (float v : r.gray) CHECK(v == Catch::Approx(0.37).margin(1e-6));
}

TEST_CASE("resize matches independent reference resampler") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Frame f = make_frame(9, 6, {});
    f.gray.resize(54);
    for (auto& v : f.gray) v = u(rng);
    Frame r = resize_bilinear(f, 17, 11);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x)
            CHECK(r.at(x, y) ==
                  Catch::Approx(reference_resample_at(f.gray, 9, 6, 17, 11, x, y)).margin(1e-6));
}

TEST_CASE("checkerboard up-down round trip stays close") {
    Frame f = make_frame(4, 4, {1, 0, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 0, 1});
    Frame up = resize_bilinear(f, 256, 256);
    Frame back = resize_bilinear(up, 4, 4);
    double mad = 0.0;
    for (int i = 0; i < 16; ++i) mad += std::abs(back.gray[i] - f.gray[i]);
    mad /= 16.0;
    CHECK(mad < 0.25);
}
