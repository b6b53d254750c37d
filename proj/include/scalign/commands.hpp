#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "scalign/config.hpp"
#include "scalign/metrics.hpp"
#include "scalign/synth.hpp"

// File-level stages behind the command-line tool. Each reads its inputs from
// disk and writes its outputs under `out`.
namespace scalign::commands {

namespace fs = std::filesystem;

struct Context {
    PipelineConfig cfg;
    fs::path out = ".";
    std::optional<fs::path> dump_graph;
    std::uint64_t seed = 0;
    double sample_density = kDefaultSampleDensity;
    std::ostream* log = nullptr; // warnings; may be null
};

// Writes the synthetic bundle; returns its manifest.
fs::path synth(const SynthSpec& spec, const Context& ctx);

// out/aligned/frame_NNNN.dpth per keyframe, out/scales.txt and a manifest
// out/scene.txt listing the aligned depths. Returns the manifest.
fs::path align(const fs::path& scene, const Context& ctx);

// Integrates every `depth` entry of the manifest; writes out/tsdf.vol and
// out/weight.vol and returns the tsdf path.
fs::path fuse(const fs::path& scene, const Context& ctx);

// Marching cubes on a volume dump; writes out/mesh.ply.
fs::path extract(const fs::path& tsdf, const fs::path& weights, const Context& ctx);

// Renders the mesh at every frame with a `depth` entry (every pose when there
// is none); writes out/rendered/frame_NNNN.dpth and out/scene.txt carrying
// over the ground truth entries. Returns the manifest.
fs::path render(const fs::path& mesh, const fs::path& scene, const Context& ctx);

std::string eval_mesh(const fs::path& pred, const fs::path& gt, const Context& ctx);

// Each argument is a depth file or a manifest. A manifest contributes its
// `depth` entries as predictions and its `gt_depth` entries as ground truth;
// frames are paired by id.
std::string eval_depth(const fs::path& pred, const fs::path& gt, const Context& ctx);

// align, fuse, extract, render, then evaluation against whatever ground truth
// the manifest provides. Writes out/report.txt and returns its path.
fs::path pipeline(const fs::path& scene, const Context& ctx);

} // namespace scalign::commands
