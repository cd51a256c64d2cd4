#include <cstdio>

#include <doctest.h>

#include "zest/errors.hpp"
#include "zest/image.hpp"
#include "zest/rng.hpp"

using namespace zest;

TEST_CASE("png file round trip preserves pixels") {
    Rng rng(77);
    Image img(31, 17);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            img.set(x, y, static_cast<std::uint8_t>(rng.below(256)),
                    static_cast<std::uint8_t>(rng.below(256)),
                    static_cast<std::uint8_t>(rng.below(256)));
        }
    }
    const std::string path = "image_roundtrip_test.png";
    write_png(img, path);
    const Image back = read_png(path);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.pixels == img.pixels);
    std::remove(path.c_str());
}

TEST_CASE("in-memory encode matches the file encoder") {
    Image img(8, 8, 200, 10, 60);
    const auto bytes = encode_png(img);
    REQUIRE(bytes.size() > 8);
    // PNG signature
    CHECK(bytes[0] == 0x89);
    CHECK(bytes[1] == 'P');
    CHECK(bytes[2] == 'N');
    CHECK(bytes[3] == 'G');

    const std::string path = "image_encode_test.png";
    write_png(img, path);
    const Image back = read_png(path);
    CHECK(back.pixels == img.pixels);
    std::remove(path.c_str());
}

TEST_CASE("reading a missing or corrupt file raises") {
    CHECK_THROWS_AS(read_png("missing_file_nope.png"), ValidationError);
    const std::string path = "image_corrupt_test.png";
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("this is not a png", f);
    std::fclose(f);
    CHECK_THROWS_AS(read_png(path), ParseError);
    std::remove(path.c_str());
}

TEST_CASE("labels render as white digits with dark outline") {
    Image img(40, 20, 100, 100, 100);
    draw_label(img, 20, 10, 42, 1);
    int white = 0, black = 0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const auto* p = img.at(x, y);
            if (p[0] == 255 && p[1] == 255 && p[2] == 255) ++white;
            if (p[0] == 0 && p[1] == 0 && p[2] == 0) ++black;
        }
    }
    CHECK(white > 10);
    CHECK(black > 10);
}

TEST_CASE("base64 reference vectors") {
    auto enc = [](const std::string& s) {
        return base64_encode(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
    };
    CHECK(enc("") == "");
    CHECK(enc("f") == "Zg==");
    CHECK(enc("fo") == "Zm8=");
    CHECK(enc("foo") == "Zm9v");
    CHECK(enc("foobar") == "Zm9vYmFy");
}
