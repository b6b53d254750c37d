#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scalign/anchors.hpp"
#include "scalign/geometry.hpp"
#include "scalign/tsdf.hpp"

namespace scalign::io {

namespace fs = std::filesystem;

// ---- trajectories -------------------------------------------------------

struct StampedPose {
    double timestamp = 0.0;
    Pose pose;
};

// TUM format: `timestamp tx ty tz qx qy qz qw`, camera-to-world. Lines
// starting with '#' and blank lines are skipped.
std::vector<StampedPose> read_tum(const fs::path& path);
void write_tum(const fs::path& path, const std::vector<StampedPose>& poses);

// ---- intrinsics ---------------------------------------------------------

// `fx fy cx cy` then `width height`.
Intrinsics read_intrinsics(const fs::path& path);
void write_intrinsics(const fs::path& path, const Intrinsics& k);

// ---- depth maps ---------------------------------------------------------

// `.png`: 16-bit grayscale in millimeters, 0 = invalid.
// `.dpth`: "DPTH", u32 width, u32 height, u32 reserved (0), then width*height
// little-endian float32 meters.
DepthMap read_depth(const fs::path& path);
void write_depth(const fs::path& path, const DepthMap& depth);

DepthMap read_depth_png(const fs::path& path);
void write_depth_png(const fs::path& path, const DepthMap& depth);
DepthMap read_depth_raw(const fs::path& path);
void write_depth_raw(const fs::path& path, const DepthMap& depth);

// ---- correspondences ----------------------------------------------------

// One match per line: `frame_a frame_b ua va ub vb`.
std::vector<Correspondence> read_correspondences(const fs::path& path);
void write_correspondences(const fs::path& path, const std::vector<Correspondence>& corrs);

// ---- meshes -------------------------------------------------------------

// Binary little-endian PLY with float x/y/z vertices and uchar/int face
// lists. The reader also accepts double vertex coordinates and extra vertex
// properties.
TriangleMesh read_ply(const fs::path& path);
void write_ply(const fs::path& path, const TriangleMesh& mesh);

// ---- volume dump --------------------------------------------------------

// Text line `nx ny nz voxel_size ox oy oz`, then nx*ny*nz little-endian
// float32, x fastest.
void write_volume_grid(const fs::path& path, const TsdfVolume& volume, bool weights);
// Reads a tsdf dump and its companion weight dump into a volume.
TsdfVolume read_volume(const fs::path& tsdf_path, const fs::path& weight_path, double truncation);

// ---- scene manifest -----------------------------------------------------

// Line-oriented manifest; relative paths resolve against its directory.
//   intrinsics <path>
//   poses <path>
//   depth <frame> <path>                  prediction shared by every submap
//   submap_depth <submap> <frame> <path>  prediction from one submap
//   gt_depth <frame> <path>
//   correspondences <path>
//   gt_mesh <path>
struct SceneBundle {
    fs::path intrinsics;
    fs::path poses;
    std::map<std::size_t, fs::path> depth;
    std::map<std::pair<std::size_t, std::size_t>, fs::path> submap_depth; // (submap, frame)
    std::map<std::size_t, fs::path> gt_depth;
    std::optional<fs::path> correspondences;
    std::optional<fs::path> gt_mesh;
};

SceneBundle read_scene(const fs::path& path);
// Paths are written relative to the manifest directory when possible.
void write_scene(const fs::path& path, const SceneBundle& bundle);

// Whole-file helpers.
std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

} // namespace scalign::io
