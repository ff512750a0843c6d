#pragma once

#include <cstdint>

namespace nsh::detail {

// Classic 256-case marching cubes triangle table, -1 terminated. Corner k of a cell sits
// at offset (k&1 ^ k>>1&1, k>>1&1, k>>2&1): 0..3 walk the z=0 face counter-clockwise,
// 4..7 repeat it at z=1. Edges 0-3 ring the bottom face, 4-7 the top, 8-11 are vertical.
extern const std::int8_t kCubeTriangles[256][16];

}  // namespace nsh::detail
