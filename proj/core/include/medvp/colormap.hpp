#pragma once

#include <array>

#include "medvp/types.hpp"

namespace medvp {

/// 256-entry colormap used by the attention overlay. Entry 0 is the
/// low-attention color, entry 255 the high-attention yellow.
const std::array<Rgb, 256>& viridis_table();

}  // namespace medvp
