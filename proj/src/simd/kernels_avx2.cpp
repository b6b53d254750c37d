// Compiled with -mavx2 and without FMA contraction so every lane reproduces
// the scalar rounding sequence.

#include <immintrin.h>

#include <cstdint>
#include <limits>

#include "kernels_internal.hpp"

namespace scalign::simd {

namespace {

constexpr std::size_t kLanes = 4;

void integrate_tsdf_row(const TsdfRowArgs& a, float* tsdf, float* weight, std::size_t count) {
    const __m256d ox = _mm256_set1_pd(a.cam_origin[0]);
    const __m256d oy = _mm256_set1_pd(a.cam_origin[1]);
    const __m256d oz = _mm256_set1_pd(a.cam_origin[2]);
    const __m256d sx = _mm256_set1_pd(a.cam_step[0]);
    const __m256d sy = _mm256_set1_pd(a.cam_step[1]);
    const __m256d sz = _mm256_set1_pd(a.cam_step[2]);
    const __m256d fx = _mm256_set1_pd(a.fx);
    const __m256d fy = _mm256_set1_pd(a.fy);
    const __m256d cx = _mm256_set1_pd(a.cx);
    const __m256d cy = _mm256_set1_pd(a.cy);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d minus_one = _mm256_set1_pd(-1.0);
    const __m256d width = _mm256_set1_pd(static_cast<double>(a.width));
    const __m256d height = _mm256_set1_pd(static_cast<double>(a.height));
    const __m256d eps = _mm256_set1_pd(a.epsilon);
    const __m256d dmax = _mm256_set1_pd(a.d_max);
    const __m256d trunc = _mm256_set1_pd(a.truncation);
    const __m256d neg_trunc = _mm256_set1_pd(-a.truncation);
    const __m256d cap = _mm256_set1_pd(static_cast<double>(a.weight_cap));
    const __m256d lane_offsets = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);

    std::size_t i = 0;
    for (; i + kLanes <= count; i += kLanes) {
        const __m256d di = _mm256_add_pd(_mm256_set1_pd(static_cast<double>(i)), lane_offsets);
        const __m256d x = _mm256_add_pd(ox, _mm256_mul_pd(di, sx));
        const __m256d y = _mm256_add_pd(oy, _mm256_mul_pd(di, sy));
        const __m256d z = _mm256_add_pd(oz, _mm256_mul_pd(di, sz));
        __m256d mask = _mm256_cmp_pd(z, zero, _CMP_GT_OQ);
        if (_mm256_movemask_pd(mask) == 0) {
            continue;
        }
        const __m256d u = _mm256_floor_pd(_mm256_add_pd(_mm256_add_pd(_mm256_div_pd(_mm256_mul_pd(fx, x), z), cx), half));
        const __m256d v = _mm256_floor_pd(_mm256_add_pd(_mm256_add_pd(_mm256_div_pd(_mm256_mul_pd(fy, y), z), cy), half));
        mask = _mm256_and_pd(mask, _mm256_cmp_pd(u, zero, _CMP_GE_OQ));
        mask = _mm256_and_pd(mask, _mm256_cmp_pd(u, width, _CMP_LT_OQ));
        mask = _mm256_and_pd(mask, _mm256_cmp_pd(v, zero, _CMP_GE_OQ));
        mask = _mm256_and_pd(mask, _mm256_cmp_pd(v, height, _CMP_LT_OQ));
        if (_mm256_movemask_pd(mask) == 0) {
            continue;
        }
        const __m256d lin = _mm256_and_pd(mask, _mm256_add_pd(_mm256_mul_pd(v, width), u));
        const __m128i idx = _mm256_cvttpd_epi32(lin);
        const __m256d d = _mm256_mask_i32gather_pd(zero, a.depth, idx, mask, 8);
        mask = _mm256_and_pd(mask, _mm256_cmp_pd(d, eps, _CMP_GE_OQ));
        mask = _mm256_and_pd(mask, _mm256_cmp_pd(d, dmax, _CMP_LE_OQ));
        const __m256d sdf = _mm256_sub_pd(d, z);
        mask = _mm256_and_pd(mask, _mm256_cmp_pd(sdf, neg_trunc, _CMP_GT_OQ));
        const int bits = _mm256_movemask_pd(mask);
        if (bits == 0) {
            continue;
        }
        const __m256d obs = _mm256_min_pd(_mm256_max_pd(_mm256_div_pd(sdf, trunc), minus_one), one);
        const __m256d w = _mm256_cvtps_pd(_mm_loadu_ps(weight + i));
        const __m256d t = _mm256_cvtps_pd(_mm_loadu_ps(tsdf + i));
        const __m256d w1 = _mm256_add_pd(w, one);
        const __m128 new_t = _mm256_cvtpd_ps(_mm256_div_pd(_mm256_add_pd(_mm256_mul_pd(t, w), obs), w1));
        const __m128 new_w = _mm256_cvtpd_ps(_mm256_min_pd(w1, cap));
        alignas(16) float tv[kLanes];
        alignas(16) float wv[kLanes];
        _mm_store_ps(tv, new_t);
        _mm_store_ps(wv, new_w);
        for (std::size_t l = 0; l < kLanes; ++l) {
            if ((bits >> l) & 1) {
                tsdf[i + l] = tv[l];
                weight[i + l] = wv[l];
            }
        }
    }
    detail::integrate_tsdf_span_scalar(a, tsdf, weight, i, count);
}

double min_sq_distance(const double* xs, const double* ys, const double* zs, std::size_t count, double qx, double qy,
                       double qz, std::size_t* argmin) {
    const __m256d vqx = _mm256_set1_pd(qx);
    const __m256d vqy = _mm256_set1_pd(qy);
    const __m256d vqz = _mm256_set1_pd(qz);
    __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    __m256d best_idx = _mm256_set1_pd(-1.0);
    __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
    const __m256d step = _mm256_set1_pd(static_cast<double>(kLanes));

    std::size_t i = 0;
    for (; i + kLanes <= count; i += kLanes) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vqx);
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vqy);
        const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), vqz);
        const __m256d d = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)), _mm256_mul_pd(dz, dz));
        const __m256d lt = _mm256_cmp_pd(d, best, _CMP_LT_OQ);
        best = _mm256_blendv_pd(best, d, lt);
        best_idx = _mm256_blendv_pd(best_idx, idx, lt);
        idx = _mm256_add_pd(idx, step);
    }

    alignas(32) double bv[kLanes];
    alignas(32) double bi[kLanes];
    _mm256_store_pd(bv, best);
    _mm256_store_pd(bi, best_idx);
    double result = std::numeric_limits<double>::infinity();
    std::size_t arg = std::numeric_limits<std::size_t>::max();
    for (std::size_t l = 0; l < kLanes; ++l) {
        if (bi[l] < 0.0) {
            continue;
        }
        const auto li = static_cast<std::size_t>(bi[l]);
        if (bv[l] < result || (bv[l] == result && li < arg)) {
            result = bv[l];
            arg = li;
        }
    }
    std::size_t tail_arg = 0;
    const double tail = detail::min_sq_distance_span_scalar(xs, ys, zs, i, count, qx, qy, qz, &tail_arg);
    if (tail < result) {
        result = tail;
        arg = tail_arg;
    }
    if (argmin != nullptr) {
        *argmin = arg;
    }
    return result;
}

void scale_valid(const double* in, double* out, std::size_t count, double scale) {
    const __m256d s = _mm256_set1_pd(scale);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= count; i += kLanes) {
        const __m256d v = _mm256_loadu_pd(in + i);
        const __m256d valid = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(v, _mm256_mul_pd(s, v), valid));
    }
    for (; i < count; ++i) {
        out[i] = in[i] > 0.0 ? scale * in[i] : in[i];
    }
}

void depth_error_sums(const double* pred, const double* gt, std::size_t count, double epsilon, double d_max,
                      DepthErrorSums* sums) {
    const __m256d eps = _mm256_set1_pd(epsilon);
    const __m256d dmax = _mm256_set1_pd(d_max);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d t105 = _mm256_set1_pd(1.05);
    const __m256d t125 = _mm256_set1_pd(1.25);
    const __m256d sign_bit = _mm256_set1_pd(-0.0);
    __m256d abs_rel = zero;
    __m256d abs_diff = zero;
    __m256d sq_rel = zero;
    __m256i n105 = _mm256_setzero_si256();
    __m256i n125 = _mm256_setzero_si256();
    __m256i n_both = _mm256_setzero_si256();
    __m256i n_gt = _mm256_setzero_si256();

    std::size_t i = 0;
    for (; i + kLanes <= count; i += kLanes) {
        const __m256d g = _mm256_loadu_pd(gt + i);
        const __m256d p = _mm256_loadu_pd(pred + i);
        const __m256d gv = _mm256_and_pd(_mm256_cmp_pd(g, eps, _CMP_GE_OQ), _mm256_cmp_pd(g, dmax, _CMP_LE_OQ));
        const __m256d pv = _mm256_and_pd(_mm256_cmp_pd(p, eps, _CMP_GE_OQ), _mm256_cmp_pd(p, dmax, _CMP_LE_OQ));
        const __m256d both = _mm256_and_pd(gv, pv);
        n_gt = _mm256_sub_epi64(n_gt, _mm256_castpd_si256(gv));
        if (_mm256_movemask_pd(both) == 0) {
            continue;
        }
        n_both = _mm256_sub_epi64(n_both, _mm256_castpd_si256(both));
        // Lanes outside `both` may hold inf/nan; they are masked before use.
        const __m256d diff = _mm256_sub_pd(p, g);
        const __m256d ad = _mm256_andnot_pd(sign_bit, diff);
        abs_rel = _mm256_add_pd(abs_rel, _mm256_and_pd(both, _mm256_div_pd(ad, g)));
        abs_diff = _mm256_add_pd(abs_diff, _mm256_and_pd(both, ad));
        sq_rel = _mm256_add_pd(sq_rel, _mm256_and_pd(both, _mm256_div_pd(_mm256_mul_pd(diff, diff), g)));
        const __m256d ratio = _mm256_max_pd(_mm256_div_pd(p, g), _mm256_div_pd(g, p));
        const __m256d in105 = _mm256_and_pd(both, _mm256_cmp_pd(ratio, t105, _CMP_LT_OQ));
        const __m256d in125 = _mm256_and_pd(both, _mm256_cmp_pd(ratio, t125, _CMP_LT_OQ));
        n105 = _mm256_sub_epi64(n105, _mm256_castpd_si256(in105));
        n125 = _mm256_sub_epi64(n125, _mm256_castpd_si256(in125));
    }

    alignas(32) double f[kLanes];
    alignas(32) std::int64_t c[kLanes];
    const auto fold = [&](__m256d v) {
        _mm256_store_pd(f, v);
        return (f[0] + f[1]) + (f[2] + f[3]);
    };
    const auto count_lanes = [&](__m256i v) {
        _mm256_store_si256(reinterpret_cast<__m256i*>(c), v);
        return static_cast<std::uint64_t>(c[0] + c[1] + c[2] + c[3]);
    };
    sums->abs_rel += fold(abs_rel);
    sums->abs_diff += fold(abs_diff);
    sums->sq_rel += fold(sq_rel);
    sums->delta_105 += count_lanes(n105);
    sums->delta_125 += count_lanes(n125);
    sums->both_valid += count_lanes(n_both);
    sums->gt_valid += count_lanes(n_gt);
    detail::depth_error_span_scalar(pred, gt, i, count, epsilon, d_max, sums);
}

} // namespace

namespace detail {

const Kernels& avx2_table() {
    static const Kernels table{Level::Avx2, integrate_tsdf_row, min_sq_distance, scale_valid, depth_error_sums};
    return table;
}

} // namespace detail

} // namespace scalign::simd
