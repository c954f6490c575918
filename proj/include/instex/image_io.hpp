#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "instex/grid.hpp"

namespace instex {

using Rgb16 = std::array<std::uint16_t, 3>;

// PNG encoding to memory and disk. All writers throw std::runtime_error on
// libpng failure; decoders reject anything that is not the expected layout.

std::vector<std::uint8_t> encode_png(const RgbImage& image);
std::vector<std::uint8_t> encode_png(const Grid<std::uint8_t>& gray);
std::vector<std::uint8_t> encode_png(const Grid<std::uint16_t>& gray16);
std::vector<std::uint8_t> encode_png(const Grid<Rgb16>& rgb16);

RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes);
Grid<std::uint8_t> decode_png_gray(std::span<const std::uint8_t> bytes);
Grid<std::uint16_t> decode_png_gray16(std::span<const std::uint8_t> bytes);
Grid<Rgb16> decode_png_rgb16(std::span<const std::uint8_t> bytes);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

template <typename Image>
void write_png(const std::filesystem::path& path, const Image& image) {
    write_file(path, encode_png(image));
}

}  // namespace instex
