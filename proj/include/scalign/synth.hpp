#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "scalign/anchors.hpp"
#include "scalign/geometry.hpp"
#include "scalign/keyframes.hpp"

namespace scalign {

enum class TrajectoryStyle { Outward, Inward };

// Box room spanning [0, room] with a camera circling its vertical axis.
struct SynthSpec {
    Vec3 room{4.0, 4.0, 2.5};
    int camera_count = 40;
    TrajectoryStyle style = TrajectoryStyle::Inward;
    double radius = 1.0;
    // Pitch oscillates as pitch_amplitude_deg * sin(pitch_cycles * theta).
    double pitch_amplitude_deg = 25.0;
    int pitch_cycles = 3;
    std::uint64_t seed = 0;
    // Per-submap depth corruption factors are uniform in [scale_lo, scale_hi].
    double scale_lo = 1.0;
    double scale_hi = 1.0;
    SubmapConfig submaps{8, 4};
    double t_max = 0.1;
    double r_max = 15.0;
    Intrinsics k{80.0, 80.0, 79.5, 59.5, 160, 120};
    // Spacing of the surface lattice used for correspondences.
    double lattice_spacing = 0.25;
    double wall_margin = 0.1;

    void validate() const;
};

struct SynthScene {
    Vec3 room = Vec3::Zero();
    Intrinsics k;
    std::vector<Pose> poses;          // every frame
    std::vector<DepthMap> gt_depths;  // every frame, analytic z-depth
    KeyframeSequence keyframes;
    std::vector<Submap> submaps;
    std::vector<double> corruption;   // one factor per submap
    // predictions[m][p - submaps[m].start] = corruption[m] * gt depth of
    // keyframe position p.
    std::vector<std::vector<DepthMap>> predictions;
    // Frame ids (not keyframe positions).
    std::vector<Correspondence> correspondences;
    TriangleMesh gt_mesh;
};

// Twelve-triangle box with outward-facing winding.
TriangleMesh box_mesh(const Vec3& lo, const Vec3& hi);

// Exact z-depth of the room interior seen from `pose`, per pixel center.
DepthMap box_interior_depth(const Vec3& room, const Pose& pose, const Intrinsics& k);

// Camera whose optical axis is `forward`, image x to the right and y down
// with respect to the world up axis +z.
Pose look_along(const Vec3& position, const Vec3& forward);

// Throws InputError when the SynthSpec is invalid or the trajectory comes closer
// than wall_margin to a wall.
SynthScene synth_scene(const SynthSpec& spec);

// Writes intrinsics, poses, depths, correspondences, gt mesh, the injected
// factors (scales.txt) and the manifest scene.txt. Returns the manifest path.
std::filesystem::path write_synth_bundle(const SynthScene& scene, const std::filesystem::path& dir);

} // namespace scalign
