#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace zest {

// 8-bit RGB raster, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h, std::uint8_t r = 0, std::uint8_t g = 0, std::uint8_t b = 0);

    std::uint8_t* at(int x, int y) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
    const std::uint8_t* at(int x, int y) const {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        auto* p = at(x, y);
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
};

Image read_png(const std::string& path);
void write_png(const Image& img, const std::string& path);
std::vector<std::uint8_t> encode_png(const Image& img);

// Renders the decimal digits of `value` centered at (cx, cy): white glyphs
// over a dark outline so markers stay legible on any terrain color.
void draw_label(Image& img, int cx, int cy, int value, int scale = 2);

std::string base64_encode(const std::uint8_t* data, std::size_t len);

}  // namespace zest
