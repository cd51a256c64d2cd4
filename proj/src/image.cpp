#include "zest/image.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <memory>

#include <png.h>

#include "zest/errors.hpp"

namespace zest {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// 3x5 digit bitmaps, one row per byte (low 3 bits).
constexpr std::uint8_t kDigitRows[10][5] = {
    {0b111, 0b101, 0b101, 0b101, 0b111},  // 0
    {0b010, 0b110, 0b010, 0b010, 0b111},  // 1
    {0b111, 0b001, 0b111, 0b100, 0b111},  // 2
    {0b111, 0b001, 0b111, 0b001, 0b111},  // 3
    {0b101, 0b101, 0b111, 0b001, 0b001},  // 4
    {0b111, 0b100, 0b111, 0b001, 0b111},  // 5
    {0b111, 0b100, 0b111, 0b101, 0b111},  // 6
    {0b111, 0b001, 0b010, 0b010, 0b010},  // 7
    {0b111, 0b101, 0b111, 0b101, 0b111},  // 8
    {0b111, 0b101, 0b111, 0b001, 0b111},  // 9
};

}  // namespace

Image::Image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {
    if (w < 0 || h < 0) throw ValidationError("Image: negative dimensions");
    for (std::size_t i = 0; i + 2 < pixels.size(); i += 3) {
        pixels[i] = r;
        pixels[i + 1] = g;
        pixels[i + 2] = b;
    }
}

Image read_png(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw ValidationError("read_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw ValidationError("read_png: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw ValidationError("read_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("read_png: invalid PNG data in " + path);
    }

    png_init_io(png, file.get());
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_packing(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    Image img(static_cast<int>(png_get_image_width(png, info)),
              static_cast<int>(png_get_image_height(png, info)));
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = img.at(0, y);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

namespace {

void write_png_common(png_structp png, png_infop info, const Image& img) {
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) {
        rows[y] = const_cast<png_bytep>(img.at(0, y));
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
}

}  // namespace

void write_png(const Image& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0) throw ValidationError("write_png: empty image");
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw ValidationError("write_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw ValidationError("write_png: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw ValidationError("write_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ValidationError("write_png: write failed for " + path);
    }
    png_init_io(png, file.get());
    write_png_common(png, info, img);
    png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.width <= 0 || img.height <= 0) throw ValidationError("encode_png: empty image");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw ValidationError("encode_png: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw ValidationError("encode_png: png_create_info_struct failed");
    }

    std::vector<std::uint8_t> out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ValidationError("encode_png: encoding failed");
    }
    png_set_write_fn(
        png, &out,
        [](png_structp p, png_bytep data, png_size_t len) {
            auto* sink = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
            sink->insert(sink->end(), data, data + len);
        },
        nullptr);
    write_png_common(png, info, img);
    png_destroy_write_struct(&png, &info);
    return out;
}

void draw_label(Image& img, int cx, int cy, int value, int scale) {
    if (scale < 1) scale = 1;
    if (value < 0) value = 0;
    std::string digits = std::to_string(value);
    const int glyph_w = 3 * scale;
    const int glyph_h = 5 * scale;
    const int spacing = scale;
    const int total_w = static_cast<int>(digits.size()) * glyph_w +
                        (static_cast<int>(digits.size()) - 1) * spacing;

    int x0 = cx - total_w / 2;
    int y0 = cy - glyph_h / 2;
    x0 = std::max(1, std::min(x0, img.width - total_w - 1));
    y0 = std::max(1, std::min(y0, img.height - glyph_h - 1));

    // Outline pass then fill pass.
    for (int pass = 0; pass < 2; ++pass) {
        int x = x0;
        for (char ch : digits) {
            const auto& rows = kDigitRows[ch - '0'];
            for (int ry = 0; ry < 5; ++ry) {
                for (int rx = 0; rx < 3; ++rx) {
                    if (!((rows[ry] >> (2 - rx)) & 1)) continue;
                    for (int sy = 0; sy < scale; ++sy) {
                        for (int sx = 0; sx < scale; ++sx) {
                            const int px = x + rx * scale + sx;
                            const int py = y0 + ry * scale + sy;
                            if (pass == 0) {
                                for (int oy = -1; oy <= 1; ++oy) {
                                    for (int ox = -1; ox <= 1; ++ox) {
                                        if (img.contains(px + ox, py + oy)) {
                                            img.set(px + ox, py + oy, 0, 0, 0);
                                        }
                                    }
                                }
                            } else if (img.contains(px, py)) {
                                img.set(px, py, 255, 255, 255);
                            }
                        }
                    }
                }
            }
            x += glyph_w + spacing;
        }
    }
}

std::string base64_encode(const std::uint8_t* data, std::size_t len) {
    static const char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        const std::uint32_t b0 = data[i];
        const std::uint32_t b1 = i + 1 < len ? data[i + 1] : 0;
        const std::uint32_t b2 = i + 2 < len ? data[i + 2] : 0;
        const std::uint32_t triple = (b0 << 16) | (b1 << 8) | b2;
        out.push_back(table[(triple >> 18) & 0x3f]);
        out.push_back(table[(triple >> 12) & 0x3f]);
        out.push_back(i + 1 < len ? table[(triple >> 6) & 0x3f] : '=');
        out.push_back(i + 2 < len ? table[triple & 0x3f] : '=');
    }
    return out;
}

}  // namespace zest
