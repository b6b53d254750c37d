#pragma once

#include "scalign/geometry.hpp"

namespace scalign {

// Near clipping plane in camera z (meters).
inline constexpr double kNearPlane = 1e-4;

// Z-buffer rasterization of a mesh: each pixel center receives the smallest
// camera-frame z over the triangles covering it, interpolated perspective-
// correctly. Uncovered pixels are 0. Both windings are drawn; triangles
// crossing the near plane are clipped against it.
DepthMap render_depth(const TriangleMesh& mesh, const Pose& pose, const Intrinsics& k);

} // namespace scalign
