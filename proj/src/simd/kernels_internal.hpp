#pragma once

#include "scalign/simd/kernels.hpp"

// Scalar loops shared by the reference table and the vector tails.
namespace scalign::simd::detail {

void integrate_tsdf_span_scalar(const TsdfRowArgs& a, float* tsdf, float* weight, std::size_t begin,
                                std::size_t end);

double min_sq_distance_span_scalar(const double* xs, const double* ys, const double* zs, std::size_t begin,
                                   std::size_t end, double qx, double qy, double qz, std::size_t* argmin);

void depth_error_span_scalar(const double* pred, const double* gt, std::size_t begin, std::size_t end,
                             double epsilon, double d_max, DepthErrorSums* sums);

#if defined(SCALIGN_HAVE_AVX2)
const Kernels& avx2_table();
#endif

} // namespace scalign::simd::detail
