#include "scalign/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace scalign {

void Intrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw InputError("intrinsics: focal lengths must be positive");
    }
    if (width <= 0 || height <= 0) {
        throw InputError("intrinsics: image size must be positive");
    }
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
        throw InputError("intrinsics: principal point outside the image");
    }
}

Pose::Pose(const Mat3& rotation, const Vec3& translation) : rotation_(rotation), translation_(translation) {
    if (!rotation.allFinite() || !translation.allFinite()) {
        throw InputError("pose: non-finite entries");
    }
    const double ortho_err = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho_err > 1e-9 || std::abs(rotation.determinant() - 1.0) > 1e-9) {
        throw InputError("pose: rotation is not a proper orthonormal matrix");
    }
}

Pose Pose::from_quaternion(const Vec3& translation, double qx, double qy, double qz, double qw) {
    Eigen::Quaterniond q(qw, qx, qy, qz);
    const double norm = q.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw InputError("pose: degenerate quaternion");
    }
    q.coeffs() /= norm;
    return {q.toRotationMatrix(), translation};
}

Eigen::Vector4d Pose::quaternion_xyzw() const {
    Eigen::Quaterniond q(rotation_);
    q.normalize();
    if (q.w() < 0.0) {
        q.coeffs() = -q.coeffs();
    }
    return {q.x(), q.y(), q.z(), q.w()};
}

Pose Pose::operator*(const Pose& rhs) const {
    Pose out;
    out.rotation_ = rotation_ * rhs.rotation_;
    out.translation_ = rotation_ * rhs.translation_ + translation_;
    return out;
}

Pose Pose::inverse() const {
    Pose out;
    out.rotation_ = rotation_.transpose();
    out.translation_ = -(out.rotation_ * translation_);
    return out;
}

double translation_distance(const Pose& a, const Pose& b) {
    return (a.translation() - b.translation()).norm();
}

double rotation_angle(const Pose& a, const Pose& b) {
    const Mat3 rel = a.rotation().transpose() * b.rotation();
    const double c = std::clamp((rel.trace() - 1.0) * 0.5, -1.0, 1.0);
    return std::acos(c);
}

Projection project(const Vec3& world, const Pose& pose, const Intrinsics& k) {
    const Vec3 pc = pose.to_camera(world);
    Projection out;
    out.depth = pc.z();
    if (!(pc.z() > 0.0)) {
        return out;
    }
    out.in_front = true;
    out.pixel = {k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy};
    return out;
}

Vec3 backproject(const Vec2& pixel, double depth, const Pose& pose, const Intrinsics& k) {
    if (!(depth > 0.0) || !std::isfinite(depth)) {
        throw InputError("backproject: depth must be positive and finite");
    }
    const Vec3 pc((pixel.x() - k.cx) * depth / k.fx, (pixel.y() - k.cy) * depth / k.fy, depth);
    return pose.transform(pc);
}

void DepthValidityRange::validate() const {
    if (!(epsilon > 0.0) || !(epsilon < d_max) || !std::isfinite(d_max)) {
        throw InputError("depth range: require 0 < epsilon < d_max");
    }
}

DepthMap::DepthMap(int width, int height, double fill)
    : width_(width), height_(height), values_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 0 || height < 0) {
        throw InputError("depth map: negative size");
    }
}

DepthMap::DepthMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (width < 0 || height < 0 || values_.size() != static_cast<std::size_t>(width) * height) {
        throw InputError("depth map: value count does not match dimensions");
    }
}

double DepthMap::sample_nearest(const Vec2& pixel) const {
    const int x = nearest_pixel(pixel.x(), width_);
    const int y = nearest_pixel(pixel.y(), height_);
    if (x < 0 || y < 0) {
        return 0.0;
    }
    return at(x, y);
}

std::size_t DepthMap::valid_count() const {
    return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), is_valid));
}

void TriangleMesh::validate() const {
    const auto n = vertices.size();
    for (const Face& f : faces) {
        if (f[0] >= n || f[1] >= n || f[2] >= n) {
            throw InputError("mesh: face index out of range");
        }
        if (f[0] == f[1] && f[1] == f[2]) {
            throw InputError("mesh: degenerate face");
        }
    }
}

double TriangleMesh::surface_area() const {
    double area = 0.0;
    for (const Face& f : faces) {
        area += 0.5 * (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]).norm();
    }
    return area;
}

} // namespace scalign
