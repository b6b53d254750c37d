#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalign/anchors.hpp"
#include "scalign/config.hpp"
#include "scalign/io.hpp"
#include "scalign/keyframes.hpp"
#include "scalign/metrics.hpp"
#include "scalign/scale_graph.hpp"
#include "scalign/tsdf.hpp"

namespace scalign {

struct AlignInputs {
    Intrinsics k;
    std::vector<Pose> poses; // every frame
    // Frame ids, not keyframe positions. Matches involving a frame that is
    // not selected as a keyframe are ignored.
    std::vector<Correspondence> correspondences;
    // Depth predicted for `frame` by submap `submap`.
    std::function<DepthMap(std::size_t submap, std::size_t frame)> prediction;
};

struct AlignResult {
    KeyframeSequence keyframes;
    std::vector<Submap> submaps;
    std::vector<std::size_t> anchor_counts;  // accepted views per submap
    std::vector<double> initial_scales;      // s^(0); 1 when no anchor was usable
    std::vector<bool> low_confidence;
    ScaleGraphProblem problem;
    ScaleSolution solution;
    std::vector<DepthMap> aligned;           // per keyframe position
    std::vector<std::string> warnings;
};

AlignResult run_align(const AlignInputs& inputs, const PipelineConfig& cfg);

// Reads intrinsics, poses and correspondences eagerly; depth files are read
// on demand. A `submap_depth` entry takes precedence over a `depth` entry.
AlignInputs load_align_inputs(const io::SceneBundle& bundle);

// `submap first_frame last_frame anchors s0 s_star low_confidence` lines.
std::string format_scale_report(const AlignResult& result);
// `i j r weight count` per edge, then `i s0 s_star` per node.
std::string format_graph_dump(const AlignResult& result);

// Throws EmptyVolume when no depth sample is in range.
TsdfVolume run_fuse(std::span<const DepthMap> depths, std::span<const Pose> poses, const Intrinsics& k,
                    const PipelineConfig& cfg);

struct FusionResult {
    TsdfVolume volume;
    TriangleMesh mesh;
};

FusionResult run_fuse_extract(std::span<const DepthMap> depths, std::span<const Pose> poses, const Intrinsics& k,
                              const PipelineConfig& cfg);

std::vector<DepthMap> run_render(const TriangleMesh& mesh, std::span<const Pose> poses, const Intrinsics& k);

// Both meshes are sampled at `density` points per square meter.
MeshMetrics run_eval_mesh(const TriangleMesh& pred, const TriangleMesh& gt, double tau,
                          double density = kDefaultSampleDensity, std::uint64_t seed = 0);

} // namespace scalign
