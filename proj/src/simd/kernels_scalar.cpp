#include "scalign/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels_internal.hpp"

namespace scalign::simd {

namespace detail {

void integrate_tsdf_span_scalar(const TsdfRowArgs& a, float* tsdf, float* weight, std::size_t begin,
                                std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
        const double di = static_cast<double>(i);
        const double x = a.cam_origin[0] + di * a.cam_step[0];
        const double y = a.cam_origin[1] + di * a.cam_step[1];
        const double z = a.cam_origin[2] + di * a.cam_step[2];
        if (!(z > 0.0)) {
            continue;
        }
        const double u = std::floor(a.fx * x / z + a.cx + 0.5);
        const double v = std::floor(a.fy * y / z + a.cy + 0.5);
        if (!(u >= 0.0 && u < a.width && v >= 0.0 && v < a.height)) {
            continue;
        }
        const double d = a.depth[static_cast<std::size_t>(v * a.width + u)];
        if (!(d >= a.epsilon && d <= a.d_max)) {
            continue;
        }
        const double sdf = d - z;
        if (!(sdf > -a.truncation)) {
            continue;
        }
        const double obs = std::min(std::max(sdf / a.truncation, -1.0), 1.0);
        const double w = weight[i];
        const double t = tsdf[i];
        tsdf[i] = static_cast<float>((t * w + obs) / (w + 1.0));
        weight[i] = static_cast<float>(std::min(w + 1.0, static_cast<double>(a.weight_cap)));
    }
}

double min_sq_distance_span_scalar(const double* xs, const double* ys, const double* zs, std::size_t begin,
                                   std::size_t end, double qx, double qy, double qz, std::size_t* argmin) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = begin; i < end; ++i) {
        const double dx = xs[i] - qx;
        const double dy = ys[i] - qy;
        const double dz = zs[i] - qz;
        const double d = dx * dx + dy * dy + dz * dz;
        if (d < best) {
            best = d;
            arg = i;
        }
    }
    if (argmin != nullptr) {
        *argmin = arg;
    }
    return best;
}

void depth_error_span_scalar(const double* pred, const double* gt, std::size_t begin, std::size_t end,
                             double epsilon, double d_max, DepthErrorSums* sums) {
    for (std::size_t i = begin; i < end; ++i) {
        const double g = gt[i];
        if (!(g >= epsilon && g <= d_max)) {
            continue;
        }
        ++sums->gt_valid;
        const double p = pred[i];
        if (!(p >= epsilon && p <= d_max)) {
            continue;
        }
        ++sums->both_valid;
        const double diff = p - g;
        const double ad = std::abs(diff);
        sums->abs_rel += ad / g;
        sums->abs_diff += ad;
        sums->sq_rel += diff * diff / g;
        const double ratio = std::max(p / g, g / p);
        sums->delta_105 += ratio < 1.05 ? 1 : 0;
        sums->delta_125 += ratio < 1.25 ? 1 : 0;
    }
}

} // namespace detail

namespace {

void integrate_tsdf_row(const TsdfRowArgs& args, float* tsdf, float* weight, std::size_t count) {
    detail::integrate_tsdf_span_scalar(args, tsdf, weight, 0, count);
}

double min_sq_distance(const double* xs, const double* ys, const double* zs, std::size_t count, double qx, double qy,
                       double qz, std::size_t* argmin) {
    return detail::min_sq_distance_span_scalar(xs, ys, zs, 0, count, qx, qy, qz, argmin);
}

void scale_valid(const double* in, double* out, std::size_t count, double scale) {
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = in[i] > 0.0 ? scale * in[i] : in[i];
    }
}

void depth_error_sums(const double* pred, const double* gt, std::size_t count, double epsilon, double d_max,
                      DepthErrorSums* sums) {
    detail::depth_error_span_scalar(pred, gt, 0, count, epsilon, d_max, sums);
}

} // namespace

const Kernels& scalar_kernels() {
    static const Kernels table{Level::Scalar, integrate_tsdf_row, min_sq_distance, scale_valid, depth_error_sums};
    return table;
}

} // namespace scalign::simd
