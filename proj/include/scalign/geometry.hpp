#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace scalign {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Thrown for malformed inputs and violated preconditions. The pipeline maps it
// to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Pinhole camera. Pixel centers sit at integer coordinates, so the image
// spans [-0.5, width - 0.5] horizontally.
struct Intrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    // Throws InputError when fx/fy are non-positive or the principal point is
    // outside the image.
    void validate() const;

    bool operator==(const Intrinsics&) const = default;
};

// Rigid camera-to-world transform: x_world = rotation * x_cam + translation.
class Pose {
public:
    Pose() = default;
    // Throws InputError if rotation is not orthonormal with det +1 (1e-9).
    Pose(const Mat3& rotation, const Vec3& translation);

    static Pose identity() { return {}; }
    // Quaternion in (x, y, z, w) order as used by TUM trajectories. The
    // quaternion is normalized before conversion.
    static Pose from_quaternion(const Vec3& translation, double qx, double qy, double qz, double qw);
    static Pose from_translation(const Vec3& translation) { return {Mat3::Identity(), translation}; }

    const Mat3& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }
    // (qx, qy, qz, qw) with qw >= 0.
    Eigen::Vector4d quaternion_xyzw() const;

    Pose operator*(const Pose& rhs) const;
    Pose inverse() const;

    Vec3 transform(const Vec3& p) const { return rotation_ * p + translation_; }
    Vec3 to_camera(const Vec3& world) const { return rotation_.transpose() * (world - translation_); }

private:
    Mat3 rotation_ = Mat3::Identity();
    Vec3 translation_ = Vec3::Zero();
};

// Translation distance (meters) and rotation angle (radians) between two poses.
double translation_distance(const Pose& a, const Pose& b);
double rotation_angle(const Pose& a, const Pose& b);

struct Projection {
    Vec2 pixel = Vec2::Zero();
    double depth = 0.0;
    // False when the camera-frame z is <= 0; pixel is then meaningless.
    bool in_front = false;
};

Projection project(const Vec3& world, const Pose& pose, const Intrinsics& k);
// Throws InputError on depth <= 0 or non-finite depth.
Vec3 backproject(const Vec2& pixel, double depth, const Pose& pose, const Intrinsics& k);

struct DepthValidityRange {
    double epsilon = 0.05;
    double d_max = 20.0;

    void validate() const;
    bool contains(double d) const { return d >= epsilon && d <= d_max; }
};

// Row-major z-depth grid in meters. Non-positive or non-finite entries are
// invalid; the [epsilon, d_max] gate is applied where the map is consumed.
class DepthMap {
public:
    DepthMap() = default;
    DepthMap(int width, int height, double fill = 0.0);
    DepthMap(int width, int height, std::vector<double> values);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }

    double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }

    // Nearest-pixel lookup at a continuous pixel coordinate. Returns 0 outside
    // the image.
    double sample_nearest(const Vec2& pixel) const;

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    std::size_t valid_count() const;

    bool operator==(const DepthMap&) const = default;

    static bool is_valid(double d) { return d > 0.0 && d < std::numeric_limits<double>::infinity(); }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

using Face = std::array<std::uint32_t, 3>;

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;

    bool empty() const { return faces.empty(); }
    // Throws InputError on out-of-range indices or a face whose three indices
    // are identical.
    void validate() const;
    double surface_area() const;
};

// Nearest integer pixel for a continuous coordinate (round half up), or -1
// when the coordinate falls outside [0, extent).
inline int nearest_pixel(double coord, int extent) {
    const double r = std::floor(coord + 0.5);
    if (!(r >= 0.0 && r < static_cast<double>(extent))) {
        return -1;
    }
    return static_cast<int>(r);
}

} // namespace scalign
