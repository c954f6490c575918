#include <doctest.h>

#include <random>

#include "instex/base64.hpp"
#include "instex/hash.hpp"
#include "instex/image_io.hpp"

using namespace instex;

TEST_CASE("base64 round trip and known vectors") {
    const std::string text = "foobar";
    const std::vector<std::uint8_t> bytes(text.begin(), text.end());
    CHECK(base64_encode(bytes) == "Zm9vYmFy");
    CHECK(base64_encode(std::span(bytes).first(4)) == "Zm9vYg==");
    CHECK(base64_encode(std::span(bytes).first(5)) == "Zm9vYmE=");
    CHECK(base64_decode("Zm9vYmE=") == std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 5));

    std::mt19937 rng(3);
    for (int n = 0; n < 64; ++n) {
        std::vector<std::uint8_t> data(n);
        for (auto& b : data) b = static_cast<std::uint8_t>(rng());
        CHECK(base64_decode(base64_encode(data)) == data);
    }
    CHECK_THROWS_AS(base64_decode("abc"), std::invalid_argument);
    CHECK_THROWS_AS(base64_decode("ab$="), std::invalid_argument);
}

TEST_CASE("hashing helpers") {
    CHECK(fnv1a64("") == kFnvOffset);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(to_hex(0xdeadbeefULL) == "00000000deadbeef");
    CHECK(hash_combine(1, 2) != hash_combine(2, 1));
}

TEST_CASE("png round trips for all layouts") {
    RgbImage rgb({3, 5});
    for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = {static_cast<std::uint8_t>(i), 7, static_cast<std::uint8_t>(255 - i)};
    CHECK(decode_png_rgb(encode_png(rgb)) == rgb);

    Grid<std::uint8_t> gray({2, 4}, 9);
    gray(1, 1) = 200;
    CHECK(decode_png_gray(encode_png(gray)) == gray);

    Grid<std::uint16_t> g16({4, 2}, 0);
    g16(1, 3) = 65535;
    g16(0, 2) = 1234;
    CHECK(decode_png_gray16(encode_png(g16)) == g16);

    Grid<Rgb16> c16({2, 2}, Rgb16{1, 2, 3});
    c16(1, 0) = {65535, 0, 40000};
    CHECK(decode_png_rgb16(encode_png(c16)) == c16);

    CHECK_THROWS(decode_png_gray(encode_png(rgb)));
    const std::vector<std::uint8_t> junk = {1, 2, 3, 4};
    CHECK_THROWS(decode_png_rgb(junk));
}
