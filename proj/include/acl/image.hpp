#pragma once

#include <string>

#include "acl/layer.hpp"

namespace acl {

enum class RenderMode {
    Gray,  // one tile per kernel, PGM output
    Rgb,   // Ci == 3 only: one tile per output channel, channels as RGB, PPM
};

// Writes the layer's materialized kernel bank as a tile grid image with
// 1-pixel gutters. Every kernel is min-max normalized to 0..255 on its own
// (a constant kernel renders as 128). Tiles fill the grid row-major in
// kernel-bank order; unused cells stay black. rows/cols = 0 picks a default
// layout: Co x Ci in gray mode, near-square in RGB mode. Output bytes are a
// pure function of the layer, so repeated renders are identical.
void render_kernels(const AclLayer& layer, const std::string& path,
                    int rows = 0, int cols = 0,
                    RenderMode mode = RenderMode::Gray);

}  // namespace acl
