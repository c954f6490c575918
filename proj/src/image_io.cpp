#include "instex/image_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include <png.h>

namespace instex {

namespace {

struct WriteSink {
    std::vector<std::uint8_t>* out;
};

void write_cb(png_structp png, png_bytep data, png_size_t length) {
    auto* sink = static_cast<WriteSink*>(png_get_io_ptr(png));
    sink->out->insert(sink->out->end(), data, data + length);
}

void flush_cb(png_structp) {}

[[noreturn]] void error_cb(png_structp, png_const_charp message) {
    throw std::runtime_error(std::string("png: ") + message);
}

void warning_cb(png_structp, png_const_charp) {}

// Rows are handed over already in PNG byte order (16-bit big endian).
std::vector<std::uint8_t> encode_rows(int width, int height, int color_type, int bit_depth,
                                      const std::vector<std::uint8_t>& packed) {
    if (width <= 0 || height <= 0) throw std::runtime_error("png: empty image");
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, error_cb, warning_cb);
    if (png == nullptr) throw std::runtime_error("png: cannot create write struct");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png: cannot create info struct");
    }
    WriteSink sink{&out};
    try {
        png_set_write_fn(png, &sink, write_cb, flush_cb);
        png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
                     color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        // Fixed compression settings keep the byte stream reproducible.
        png_set_compression_level(png, 6);
        png_write_info(png, info);
        const std::size_t row_bytes = packed.size() / static_cast<std::size_t>(height);
        for (int y = 0; y < height; ++y) {
            png_write_row(png, const_cast<png_bytep>(packed.data() + static_cast<std::size_t>(y) * row_bytes));
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

struct ReadSource {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void read_cb(png_structp png, png_bytep data, png_size_t length) {
    auto* src = static_cast<ReadSource*>(png_get_io_ptr(png));
    if (src->offset + length > src->bytes.size()) png_error(png, "unexpected end of data");
    std::memcpy(data, src->bytes.data() + src->offset, length);
    src->offset += length;
}

struct Decoded {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint8_t> rows;  // tightly packed, PNG byte order
};

Decoded decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw std::runtime_error("png: bad signature");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, error_cb, warning_cb);
    if (png == nullptr) throw std::runtime_error("png: cannot create read struct");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png: cannot create info struct");
    }
    Decoded d;
    ReadSource src{bytes};
    try {
        png_set_read_fn(png, &src, read_cb);
        png_read_info(png, info);
        const int color = png_get_color_type(png, info);
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (png_get_bit_depth(png, info) < 8) png_set_expand(png);
        if ((color & PNG_COLOR_MASK_ALPHA) != 0) png_set_strip_alpha(png);
        png_read_update_info(png, info);
        d.width = static_cast<int>(png_get_image_width(png, info));
        d.height = static_cast<int>(png_get_image_height(png, info));
        d.channels = png_get_channels(png, info);
        d.bit_depth = png_get_bit_depth(png, info);
        const std::size_t row_bytes = png_get_rowbytes(png, info);
        d.rows.resize(row_bytes * static_cast<std::size_t>(d.height));
        for (int y = 0; y < d.height; ++y) png_read_row(png, d.rows.data() + static_cast<std::size_t>(y) * row_bytes, nullptr);
        png_read_end(png, nullptr);
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return d;
}

void require_layout(const Decoded& d, int channels, int bit_depth) {
    if (d.channels != channels || d.bit_depth != bit_depth) {
        throw std::runtime_error("png: expected " + std::to_string(channels) + " channel(s) at " +
                                 std::to_string(bit_depth) + " bits, got " + std::to_string(d.channels) + " at " +
                                 std::to_string(d.bit_depth));
    }
}

}  // namespace

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
    std::vector<std::uint8_t> packed;
    packed.reserve(image.size() * 3);
    for (const auto& px : image) {
        packed.push_back(px.r);
        packed.push_back(px.g);
        packed.push_back(px.b);
    }
    return encode_rows(image.width(), image.height(), PNG_COLOR_TYPE_RGB, 8, packed);
}

std::vector<std::uint8_t> encode_png(const Grid<std::uint8_t>& gray) {
    std::vector<std::uint8_t> packed(gray.begin(), gray.end());
    return encode_rows(gray.width(), gray.height(), PNG_COLOR_TYPE_GRAY, 8, packed);
}

std::vector<std::uint8_t> encode_png(const Grid<std::uint16_t>& gray16) {
    std::vector<std::uint8_t> packed;
    packed.reserve(gray16.size() * 2);
    for (auto v : gray16) {
        packed.push_back(static_cast<std::uint8_t>(v >> 8));
        packed.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
    return encode_rows(gray16.width(), gray16.height(), PNG_COLOR_TYPE_GRAY, 16, packed);
}

std::vector<std::uint8_t> encode_png(const Grid<Rgb16>& rgb16) {
    std::vector<std::uint8_t> packed;
    packed.reserve(rgb16.size() * 6);
    for (const auto& px : rgb16) {
        for (auto v : px) {
            packed.push_back(static_cast<std::uint8_t>(v >> 8));
            packed.push_back(static_cast<std::uint8_t>(v & 0xff));
        }
    }
    return encode_rows(rgb16.width(), rgb16.height(), PNG_COLOR_TYPE_RGB, 16, packed);
}

RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes) {
    const Decoded d = decode(bytes);
    require_layout(d, 3, 8);
    RgbImage image(Extent{d.height, d.width});
    for (std::size_t i = 0; i < image.size(); ++i) image[i] = {d.rows[3 * i], d.rows[3 * i + 1], d.rows[3 * i + 2]};
    return image;
}

Grid<std::uint8_t> decode_png_gray(std::span<const std::uint8_t> bytes) {
    const Decoded d = decode(bytes);
    require_layout(d, 1, 8);
    Grid<std::uint8_t> image(Extent{d.height, d.width});
    std::copy(d.rows.begin(), d.rows.end(), image.begin());
    return image;
}

Grid<std::uint16_t> decode_png_gray16(std::span<const std::uint8_t> bytes) {
    const Decoded d = decode(bytes);
    require_layout(d, 1, 16);
    Grid<std::uint16_t> image(Extent{d.height, d.width});
    for (std::size_t i = 0; i < image.size(); ++i) {
        image[i] = static_cast<std::uint16_t>((d.rows[2 * i] << 8) | d.rows[2 * i + 1]);
    }
    return image;
}

Grid<Rgb16> decode_png_rgb16(std::span<const std::uint8_t> bytes) {
    const Decoded d = decode(bytes);
    require_layout(d, 3, 16);
    Grid<Rgb16> image(Extent{d.height, d.width});
    for (std::size_t i = 0; i < image.size(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            const std::size_t at = 6 * i + 2 * c;
            image[i][c] = static_cast<std::uint16_t>((d.rows[at] << 8) | d.rows[at + 1]);
        }
    }
    return image;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace instex
