#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "scalign/geometry.hpp"

namespace scalign {

// A two-view feature match. Frames are keyframe positions.
struct Correspondence {
    std::size_t frame_a = 0;
    std::size_t frame_b = 0;
    Vec2 pixel_a = Vec2::Zero();
    Vec2 pixel_b = Vec2::Zero();
};

// A triangulated point seen from one keyframe: the observed pixel and the
// camera-frame z of the point in that view.
struct TriangulatedAnchor {
    std::size_t frame = 0;
    Vec2 pixel = Vec2::Zero();
    double depth_triangulated = 0.0;
    double reprojection_error = 0.0;
};

enum class TriangulationStatus {
    Accepted,
    DegenerateBaseline,
    ChiralityReject,
    ReprojectionReject,
};

const char* to_string(TriangulationStatus status);

struct TriangulationResult {
    TriangulationStatus status = TriangulationStatus::DegenerateBaseline;
    // Populated whenever the linear solve succeeded, including rejections.
    std::optional<Vec3> point;
    // One anchor per view, only when accepted.
    std::array<TriangulatedAnchor, 2> anchors{};

    bool accepted() const { return status == TriangulationStatus::Accepted; }
};

// Linear (DLT) two-view triangulation gated by chirality in both views and
// reprojection error strictly below max_reproj pixels in both views.
TriangulationResult triangulate(const Vec2& pixel_a, const Pose& pose_a, const Vec2& pixel_b, const Pose& pose_b,
                                const Intrinsics& k, double max_reproj);

// Convenience overload: poses indexed by keyframe position.
TriangulationResult triangulate(const Correspondence& corr, std::span<const Pose> poses, const Intrinsics& k,
                                double max_reproj);

// Median over anchors of depth_triangulated / predicted(pixel), with
// nearest-pixel sampling. predicted_for_frame(frame) returns the prediction
// for a keyframe position or nullptr when the submap has none. Returns
// nullopt when every anchor lands on an invalid prediction.
template <typename Lookup>
std::optional<double> initial_scale_per_frame(std::span<const TriangulatedAnchor> anchors, Lookup&& predicted_for_frame);

// Single-map form: every anchor is sampled from the same prediction.
std::optional<double> initial_scale(std::span<const TriangulatedAnchor> anchors, const DepthMap& predicted);


} // namespace scalign

#include "scalign/median.hpp"

namespace scalign {

template <typename Lookup>
std::optional<double> initial_scale_per_frame(std::span<const TriangulatedAnchor> anchors, Lookup&& predicted_for_frame) {
    std::vector<double> ratios;
    ratios.reserve(anchors.size());
    for (const TriangulatedAnchor& a : anchors) {
        const DepthMap* map = predicted_for_frame(a.frame);
        if (map == nullptr) {
            continue;
        }
        const double d = map->sample_nearest(a.pixel);
        if (DepthMap::is_valid(d)) {
            ratios.push_back(a.depth_triangulated / d);
        }
    }
    return lower_median(std::move(ratios));
}

} // namespace scalign
