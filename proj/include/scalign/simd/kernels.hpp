#pragma once

// Data-parallel inner loops behind the geometry stages. Every kernel has a
// scalar reference implementation; vector variants must produce bit-identical
// results except where noted (depth_error_sums reorders a reduction).

#include <cstddef>
#include <cstdint>

namespace scalign::simd {

enum class Level {
    Scalar,
    Avx2,
};

const char* to_string(Level level);

// One row of voxels along +x. Voxel i has camera-frame position
// cam_origin + i * cam_step (each coordinate computed as o + double(i) * s).
struct TsdfRowArgs {
    double cam_origin[3];
    double cam_step[3];
    double fx, fy, cx, cy;
    int width, height;
    const double* depth; // width * height, row-major
    double epsilon, d_max;
    double truncation;
    float weight_cap;
};

struct DepthErrorSums {
    double abs_rel = 0.0;
    double abs_diff = 0.0;
    double sq_rel = 0.0;
    std::uint64_t delta_105 = 0;
    std::uint64_t delta_125 = 0;
    std::uint64_t both_valid = 0;
    std::uint64_t gt_valid = 0;
};

struct Kernels {
    Level level;

    // Running-average TSDF update of `count` voxels (see TsdfRowArgs).
    void (*integrate_tsdf_row)(const TsdfRowArgs& args, float* tsdf, float* weight, std::size_t count);

    // min over i of (xs[i]-qx)^2 + (ys[i]-qy)^2 + (zs[i]-qz)^2, and its index.
    // Ties resolve to the lowest index. Returns +inf / SIZE_MAX for count 0.
    double (*min_sq_distance)(const double* xs, const double* ys, const double* zs, std::size_t count, double qx,
                              double qy, double qz, std::size_t* argmin);

    // out[i] = in[i] > 0 ? scale * in[i] : in[i].
    void (*scale_valid)(const double* in, double* out, std::size_t count, double scale);

    // Accumulates 2D depth error terms over pixels valid (in [epsilon, d_max])
    // in both maps; gt_valid counts gt-valid pixels. Vector variants may differ
    // from scalar in the last bits of the floating sums.
    void (*depth_error_sums)(const double* pred, const double* gt, std::size_t count, double epsilon, double d_max,
                             DepthErrorSums* sums);
};

const Kernels& scalar_kernels();
// nullptr when the build or the running CPU lacks AVX2.
const Kernels* avx2_kernels();

// Kernel table used by the library. Chosen once: the best level the CPU
// supports, unless SCALIGN_SIMD=scalar|avx2 overrides it.
const Kernels& active();

} // namespace scalign::simd
