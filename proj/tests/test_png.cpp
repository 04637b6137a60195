#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "rphar/png.hpp"
#include "rphar/rp.hpp"
#include "support.hpp"

using namespace rphar;
using testing_support::Gen;
using testing_support::TempDir;

namespace {

RpImage random_image(int channels, int w, int h, Gen& g) {
    RpImage img(channels, w, h, channels == 3 ? RpVariant::rgb : RpVariant::gray);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(g.index(0, 255));
    return img;
}

}  // namespace

TEST(Png, RoundTripGrayAndRgb) {
    Gen g(5);
    for (int c : {1, 3})
        for (auto [w, h] : {std::pair{1, 1}, {7, 3}, {64, 64}, {5, 40}}) {
            const RpImage img = random_image(c, w, h, g);
            const RpImage back = png::decode(png::encode(img));
            EXPECT_EQ(back.channels, c);
            EXPECT_EQ(back.width, w);
            EXPECT_EQ(back.height, h);
            EXPECT_EQ(back.pixels, img.pixels);
        }
}

TEST(Png, SignatureAndDeterminism) {
    Gen g(6);
    const RpImage img = random_image(3, 10, 10, g);
    const auto a = png::encode(img), b = png::encode(img);
    EXPECT_EQ(a, b);
    ASSERT_GT(a.size(), 8u);
    EXPECT_EQ(a[0], 0x89);
    EXPECT_EQ(a[1], 'P');
}

TEST(Png, CorruptionDetected) {
    Gen g(7);
    auto bytes = png::encode(random_image(1, 8, 8, g));
    auto bad_sig = bytes;
    bad_sig[0] = 0;
    EXPECT_THROW(png::decode(bad_sig), ParseError);
    auto bad_crc = bytes;
    bad_crc[20] ^= 0xff;  // inside IHDR
    EXPECT_THROW(png::decode(bad_crc), ParseError);
    bytes.resize(bytes.size() / 2);
    EXPECT_THROW(png::decode(bytes), ParseError);
}

TEST(Png, FileRoundTrip) {
    TempDir dir("png");
    Gen g(8);
    const RpImage img = random_image(3, 20, 12, g);
    png::write_file(dir / "a.png", img);
    EXPECT_EQ(png::read_file(dir / "a.png").pixels, img.pixels);
    EXPECT_THROW(png::read_file(dir / "missing.png"), IngestError);
}

TEST(Png, GoldenSinusoidPlot) {
    // Distance plot of a pure sinusoid: periodic diagonal bands.
    std::vector<double> s(64);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sin(2.0 * M_PI * static_cast<double>(i) / 16.0);
    const RpImage img = rp_series(s, RpConfig{});
    ASSERT_EQ(img.width, 62);
    for (int x = 0; x + 16 < 62; ++x) EXPECT_NEAR(img.at(0, x, 0), img.at(0, x + 16, 0), 1);
    for (int i = 0; i + 16 < 62; ++i) EXPECT_LE(img.at(0, i, i + 16), 1);

    const std::filesystem::path golden = std::filesystem::path(RPHAR_TEST_DATA) / "sinusoid_rp.png";
    if (std::getenv("RPHAR_UPDATE_GOLDEN")) png::write_file(golden, img);
    const RpImage ref = png::read_file(golden);
    EXPECT_EQ(ref.width, img.width);
    EXPECT_EQ(ref.pixels, img.pixels);
}
