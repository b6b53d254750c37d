#include "scalign/anchors.hpp"

#include <Eigen/SVD>

namespace scalign {

const char* to_string(TriangulationStatus status) {
    switch (status) {
    case TriangulationStatus::Accepted: return "Accepted";
    case TriangulationStatus::DegenerateBaseline: return "DegenerateBaseline";
    case TriangulationStatus::ChiralityReject: return "ChiralityReject";
    case TriangulationStatus::ReprojectionReject: return "ReprojectionReject";
    }
    return "Unknown";
}

namespace {

Vec3 normalized_ray(const Vec2& pixel, const Intrinsics& k) {
    return {(pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, 1.0};
}

} // namespace

TriangulationResult triangulate(const Vec2& pixel_a, const Pose& pose_a, const Vec2& pixel_b, const Pose& pose_b,
                                const Intrinsics& k, double max_reproj) {
    TriangulationResult result;

    const Vec3 center_a = pose_a.translation();
    const Vec3 center_b = pose_b.translation();
    const double baseline = (center_b - center_a).norm();
    const Vec3 ray_a = normalized_ray(pixel_a, k);
    const Vec3 ray_b = normalized_ray(pixel_b, k);
    const Vec3 dir_a = (pose_a.rotation() * ray_a).normalized();
    const Vec3 dir_b = (pose_b.rotation() * ray_b).normalized();
    if (!(baseline > 1e-12) || dir_a.cross(dir_b).norm() < 1e-12) {
        return result;
    }

    // Work in a frame centered between the cameras with unit baseline so the
    // homogeneous system stays well conditioned.
    const Vec3 origin = 0.5 * (center_a + center_b);
    Eigen::Matrix4d a;
    const auto add_rows = [&](int row, const Vec3& ray, const Pose& pose) {
        Eigen::Matrix<double, 3, 4> p;
        p.leftCols<3>() = pose.rotation().transpose();
        p.col(3) = -pose.rotation().transpose() * (pose.translation() - origin) / baseline;
        a.row(row) = ray.x() * p.row(2) - p.row(0);
        a.row(row + 1) = ray.y() * p.row(2) - p.row(1);
    };
    add_rows(0, ray_a, pose_a);
    add_rows(2, ray_b, pose_b);

    const Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullV);
    const Eigen::Vector4d h = svd.matrixV().col(3);
    if (h(3) == 0.0 || !h.allFinite()) {
        return result;
    }
    const Vec3 point = origin + baseline * h.head<3>() / h(3);
    result.point = point;

    const Projection proj_a = project(point, pose_a, k);
    const Projection proj_b = project(point, pose_b, k);
    if (!proj_a.in_front || !proj_b.in_front) {
        result.status = TriangulationStatus::ChiralityReject;
        return result;
    }

    const double err_a = (proj_a.pixel - pixel_a).norm();
    const double err_b = (proj_b.pixel - pixel_b).norm();
    if (!(err_a < max_reproj) || !(err_b < max_reproj)) {
        result.status = TriangulationStatus::ReprojectionReject;
        return result;
    }

    result.status = TriangulationStatus::Accepted;
    result.anchors[0] = {0, pixel_a, proj_a.depth, err_a};
    result.anchors[1] = {0, pixel_b, proj_b.depth, err_b};
    return result;
}

TriangulationResult triangulate(const Correspondence& corr, std::span<const Pose> poses, const Intrinsics& k,
                                double max_reproj) {
    if (corr.frame_a >= poses.size() || corr.frame_b >= poses.size()) {
        throw InputError("triangulate: correspondence frame out of range");
    }
    if (corr.frame_a == corr.frame_b) {
        throw InputError("triangulate: correspondence within a single frame");
    }
    TriangulationResult r =
        triangulate(corr.pixel_a, poses[corr.frame_a], corr.pixel_b, poses[corr.frame_b], k, max_reproj);
    r.anchors[0].frame = corr.frame_a;
    r.anchors[1].frame = corr.frame_b;
    return r;
}

std::optional<double> initial_scale(std::span<const TriangulatedAnchor> anchors, const DepthMap& predicted) {
    return initial_scale_per_frame(anchors, [&](std::size_t) { return &predicted; });
}

} // namespace scalign
