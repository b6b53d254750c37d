#include "scalign/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "scalign/parallel.hpp"
#include "scalign/render.hpp"

namespace scalign {

AlignResult run_align(const AlignInputs& in, const PipelineConfig& cfg) {
    cfg.validate();
    in.k.validate();
    if (in.poses.empty()) {
        throw InputError("align: no poses");
    }
    AlignResult res;
    res.keyframes = select_keyframes(in.poses, cfg.t_max, cfg.r_max);
    res.submaps = partition_submaps(res.keyframes.size(), cfg.submap());
    const std::size_t kf = res.keyframes.size();
    const std::size_t m_count = res.submaps.size();

    std::vector<Pose> kf_poses;
    std::map<std::size_t, std::size_t> position_of;
    for (std::size_t p = 0; p < kf; ++p) {
        kf_poses.push_back(res.keyframes.entries[p].pose);
        position_of[res.keyframes.entries[p].frame_id] = p;
    }

    std::vector<std::vector<DepthMap>> predictions(m_count);
    for (const Submap& sm : res.submaps) {
        for (std::size_t p = sm.start; p <= sm.end; ++p) {
            DepthMap d = in.prediction(sm.index, res.keyframes.entries[p].frame_id);
            if (d.width() != in.k.width || d.height() != in.k.height) {
                throw DimensionMismatch("align: prediction for frame " +
                                        std::to_string(res.keyframes.entries[p].frame_id) +
                                        " does not match the intrinsics image size");
            }
            predictions[sm.index].push_back(std::move(d));
        }
    }

    // Correspondences between keyframes, re-indexed by position.
    std::vector<Correspondence> matches;
    for (const Correspondence& c : in.correspondences) {
        const auto a = position_of.find(c.frame_a);
        const auto b = position_of.find(c.frame_b);
        if (a == position_of.end() || b == position_of.end() || a->second == b->second) {
            continue;
        }
        matches.push_back({a->second, b->second, c.pixel_a, c.pixel_b});
    }
    std::vector<TriangulationResult> tri(matches.size());
    parallel_for(0, matches.size(), [&](std::size_t i) {
        tri[i] = triangulate(matches[i], kf_poses, in.k, cfg.max_reproj);
    });

    res.problem.node_count = m_count;
    res.problem.lambda = cfg.lambda;
    for (const Submap& sm : res.submaps) {
        std::vector<TriangulatedAnchor> anchors;
        for (std::size_t i = 0; i < matches.size(); ++i) {
            if (tri[i].accepted() && sm.contains(matches[i].frame_a) && sm.contains(matches[i].frame_b)) {
                anchors.push_back(tri[i].anchors[0]);
                anchors.push_back(tri[i].anchors[1]);
            }
        }
        const auto& maps = predictions[sm.index];
        const std::optional<double> s0 = initial_scale_per_frame(
            std::span<const TriangulatedAnchor>(anchors),
            [&](std::size_t p) -> const DepthMap* { return sm.contains(p) ? &maps[p - sm.start] : nullptr; });
        res.anchor_counts.push_back(anchors.size());
        res.initial_scales.push_back(s0.value_or(1.0));
        res.low_confidence.push_back(!s0.has_value());
        if (!s0) {
            res.warnings.push_back("submap " + std::to_string(sm.index) +
                                   ": no valid anchors, initial scale falls back to 1");
        }
        res.problem.priors.push_back(std::log(res.initial_scales.back()));
    }

    const std::size_t pixels = static_cast<std::size_t>(in.k.width) * static_cast<std::size_t>(in.k.height);
    const DepthValidityRange range = cfg.depth_range();
    for (std::size_t m = 0; m + 1 < m_count; ++m) {
        const Submap& a = res.submaps[m];
        const Submap& b = res.submaps[m + 1];
        const std::vector<std::size_t> shared = shared_positions(a, b);
        std::vector<std::vector<double>> ratio_sets(shared.size());
        parallel_for(0, shared.size(), [&](std::size_t s) {
            const std::size_t p = shared[s];
            ratio_sets[s] = overlap_ratios(predictions[m][p - a.start], predictions[m + 1][p - b.start], range);
        });
        const RelativeScale rel =
            edge_relative_scale(ratio_sets, EdgeWeighting::for_overlap(shared.size(), pixels));
        if (rel.valid_count == 0) {
            res.warnings.push_back("submaps " + std::to_string(m) + "-" + std::to_string(m + 1) +
                                   ": no overlapping valid pixels");
        }
        // d_i / d_j = s_j / s_i, so x_i - x_j = -ln r in log space.
        res.problem.edges.push_back({m, m + 1, -std::log(rel.r), rel.weight, rel.valid_count});
    }

    res.solution = solve_scales(res.problem);
    res.aligned = apply_scales(res.submaps, predictions, res.solution.scales);
    return res;
}

AlignInputs load_align_inputs(const io::SceneBundle& bundle) {
    AlignInputs in;
    in.k = io::read_intrinsics(bundle.intrinsics);
    for (const io::StampedPose& p : io::read_tum(bundle.poses)) {
        in.poses.push_back(p.pose);
    }
    if (!bundle.correspondences) {
        throw InputError("align: the scene manifest lists no correspondences");
    }
    in.correspondences = io::read_correspondences(*bundle.correspondences);
    for (const Correspondence& c : in.correspondences) {
        if (c.frame_a >= in.poses.size() || c.frame_b >= in.poses.size()) {
            throw InputError("align: correspondence refers to frame " +
                             std::to_string(std::max(c.frame_a, c.frame_b)) + " beyond the trajectory");
        }
    }
    in.prediction = [submap_depth = bundle.submap_depth, depth = bundle.depth](std::size_t m, std::size_t f) {
        if (const auto it = submap_depth.find({m, f}); it != submap_depth.end()) {
            return io::read_depth(it->second);
        }
        if (const auto it = depth.find(f); it != depth.end()) {
            return io::read_depth(it->second);
        }
        throw InputError("align: no depth prediction for frame " + std::to_string(f) + " in submap " +
                         std::to_string(m));
    };
    return in;
}

std::string format_scale_report(const AlignResult& r) {
    std::string out = "# submap first_frame last_frame anchors s0 s_star low_confidence\n";
    char line[256];
    for (std::size_t m = 0; m < r.submaps.size(); ++m) {
        const Submap& sm = r.submaps[m];
        std::snprintf(line, sizeof(line), "%zu %zu %zu %zu %.17g %.17g %d\n", m,
                      r.keyframes.entries[sm.start].frame_id, r.keyframes.entries[sm.end].frame_id,
                      r.anchor_counts[m], r.initial_scales[m], r.solution.scales[m],
                      r.low_confidence[m] ? 1 : 0);
        out += line;
    }
    return out;
}

std::string format_graph_dump(const AlignResult& r) {
    std::string out;
    char line[256];
    for (const ScaleEdge& e : r.problem.edges) {
        std::snprintf(line, sizeof(line), "%zu %zu %.17g %.17g %zu\n", e.i, e.j, std::exp(-e.rho), e.weight,
                      e.valid_pixel_count);
        out += line;
    }
    for (std::size_t m = 0; m < r.initial_scales.size(); ++m) {
        std::snprintf(line, sizeof(line), "%zu %.17g %.17g\n", m, r.initial_scales[m], r.solution.scales[m]);
        out += line;
    }
    return out;
}

TsdfVolume run_fuse(std::span<const DepthMap> depths, std::span<const Pose> poses, const Intrinsics& k,
                    const PipelineConfig& cfg) {
    cfg.validate();
    if (depths.empty()) {
        throw InputError("fuse: no depth maps");
    }
    if (depths.size() != poses.size()) {
        throw InputError("fuse: depth and pose counts differ");
    }
    const DepthValidityRange range = cfg.depth_range();
    TsdfVolume volume = make_volume_for(depths, poses, k, range, cfg.voxel_size, cfg.truncation);
    for (std::size_t i = 0; i < depths.size(); ++i) {
        integrate(volume, depths[i], poses[i], k, range);
    }
    return volume;
}

FusionResult run_fuse_extract(std::span<const DepthMap> depths, std::span<const Pose> poses, const Intrinsics& k,
                              const PipelineConfig& cfg) {
    TsdfVolume volume = run_fuse(depths, poses, k, cfg);
    TriangleMesh mesh = extract_mesh(volume);
    return {std::move(volume), std::move(mesh)};
}

std::vector<DepthMap> run_render(const TriangleMesh& mesh, std::span<const Pose> poses, const Intrinsics& k) {
    k.validate();
    mesh.validate();
    std::vector<DepthMap> out(poses.size());
    parallel_for(0, poses.size(), [&](std::size_t i) { out[i] = render_depth(mesh, poses[i], k); });
    return out;
}

MeshMetrics run_eval_mesh(const TriangleMesh& pred, const TriangleMesh& gt, double tau, double density,
                          std::uint64_t seed) {
    const std::vector<Vec3> p = sample_surface(pred, density, seed);
    const std::vector<Vec3> g = sample_surface(gt, density, seed + 1);
    return mesh_metrics(p, g, tau);
}

} // namespace scalign
