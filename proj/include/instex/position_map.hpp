#pragma once

#include <array>
#include <cstdint>

#include "instex/grid.hpp"

namespace instex {

/// Per-texel canonical surface position remapped into [0,1]^3
/// (stored = canonical + 0.5). Invalid texels hold (0,0,0).
struct PositionMap {
    Grid<std::array<float, 3>> position;
    Grid<std::uint8_t> valid;

    [[nodiscard]] Extent extent() const { return position.extent(); }
};

}  // namespace instex
