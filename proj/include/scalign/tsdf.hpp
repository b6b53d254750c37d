#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "scalign/geometry.hpp"

namespace scalign {

// Dense voxel grid. Voxel (x, y, z) has its center at
// origin + voxel_size * (x, y, z); storage is x-fastest.
class TsdfVolume {
public:
    static constexpr float kDefaultWeightCap = 128.0f;

    TsdfVolume(const Vec3& origin, double voxel_size, std::array<int, 3> dims, double truncation,
               float weight_cap = kDefaultWeightCap);

    const Vec3& origin() const { return origin_; }
    double voxel_size() const { return voxel_size_; }
    const std::array<int, 3>& dims() const { return dims_; }
    double truncation() const { return truncation_; }
    float weight_cap() const { return weight_cap_; }
    std::size_t voxel_count() const { return tsdf_.size(); }

    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims_[0]) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_[1]) * z);
    }
    Vec3 voxel_center(int x, int y, int z) const { return origin_ + voxel_size_ * Vec3(x, y, z); }

    float tsdf(int x, int y, int z) const { return tsdf_[index(x, y, z)]; }
    float weight(int x, int y, int z) const { return weight_[index(x, y, z)]; }
    void set(int x, int y, int z, float tsdf, float weight);

    std::span<const float> tsdf_values() const { return tsdf_; }
    std::span<const float> weight_values() const { return weight_; }
    std::span<float> tsdf_values() { return tsdf_; }
    std::span<float> weight_values() { return weight_; }

    std::size_t observed_count() const;

private:
    Vec3 origin_;
    double voxel_size_;
    std::array<int, 3> dims_;
    double truncation_;
    float weight_cap_;
    std::vector<float> tsdf_;
    std::vector<float> weight_;
};

class EmptyVolume : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Running-average update from one depth map. Voxels outside the frustum,
// on invalid depth, or more than `truncation` behind the surface are left
// untouched.
void integrate(TsdfVolume& volume, const DepthMap& depth, const Pose& pose, const Intrinsics& k,
               const DepthValidityRange& range);

// Axis-aligned grid enclosing every back-projected in-range sample, padded by
// the truncation distance. Throws EmptyVolume when no sample is in range.
TsdfVolume make_volume_for(std::span<const DepthMap> depths, std::span<const Pose> poses, const Intrinsics& k,
                           const DepthValidityRange& range, double voxel_size, double truncation);

// Marching cubes over cubes whose eight corners are observed. Vertices are
// shared between adjacent cubes.
TriangleMesh extract_mesh(const TsdfVolume& volume);

namespace mc {

// Usual corner order: 0..3 counter-clockwise on z = 0, 4..7 above them.
extern const std::array<std::array<int, 3>, 8> kCornerOffsets;
extern const std::array<std::array<int, 2>, 12> kEdgeCorners;

using CaseTriangles = std::array<int, 32>;

// Triangles per inside-corner mask (bit c set when corner c is negative), as
// triples of edge indices terminated by -1. Derived at startup by tracing the
// surface boundary across the six faces; face-ambiguous configurations keep
// the negative corners apart, so adjacent cubes always agree.
const std::array<CaseTriangles, 256>& triangle_table();

} // namespace mc

} // namespace scalign
