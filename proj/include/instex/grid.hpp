#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace instex {

/// Image / atlas dimensions. Height first, matching row-major storage.
struct Extent {
    int height = 0;
    int width = 0;

    [[nodiscard]] std::size_t area() const {
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }
    [[nodiscard]] bool contains(int x, int y) const {
        return x >= 0 && y >= 0 && x < width && y < height;
    }
    friend bool operator==(const Extent&, const Extent&) = default;
};

struct Rgb8 {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

inline constexpr Rgb8 kSentinelMagenta{255, 0, 255};
inline constexpr Rgb8 kBlack{0, 0, 0};

/// Dense row-major 2D array. Row 0 is the top of the image.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(Extent extent, const T& fill = T{}) : extent_(extent), cells_(extent.area(), fill) {}

    [[nodiscard]] Extent extent() const { return extent_; }
    [[nodiscard]] int width() const { return extent_.width; }
    [[nodiscard]] int height() const { return extent_.height; }
    [[nodiscard]] std::size_t size() const { return cells_.size(); }
    [[nodiscard]] bool empty() const { return cells_.empty(); }

    [[nodiscard]] std::size_t index(int x, int y) const {
        assert(extent_.contains(x, y));
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(extent_.width) +
               static_cast<std::size_t>(x);
    }

    T& operator()(int x, int y) { return cells_[index(x, y)]; }
    const T& operator()(int x, int y) const { return cells_[index(x, y)]; }
    T& operator[](std::size_t i) { return cells_[i]; }
    const T& operator[](std::size_t i) const { return cells_[i]; }

    [[nodiscard]] std::span<T> cells() { return cells_; }
    [[nodiscard]] std::span<const T> cells() const { return cells_; }

    auto begin() { return cells_.begin(); }
    auto end() { return cells_.end(); }
    auto begin() const { return cells_.begin(); }
    auto end() const { return cells_.end(); }

    void fill(const T& value) { std::fill(cells_.begin(), cells_.end(), value); }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    Extent extent_{};
    std::vector<T> cells_;
};

using RgbImage = Grid<Rgb8>;

}  // namespace instex
