#include "scalign/commands.hpp"

#include <cstdio>
#include <ostream>

#include "scalign/io.hpp"
#include "scalign/pipeline.hpp"

namespace scalign::commands {

namespace {

std::string frame_file(const char* dir, std::size_t frame) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s/frame_%04zu.dpth", dir, frame);
    return name;
}

void warn(const Context& ctx, const std::string& msg) {
    if (ctx.log != nullptr) {
        *ctx.log << "warning: " << msg << '\n';
    }
}

std::vector<Pose> read_poses(const fs::path& path) {
    std::vector<Pose> poses;
    for (const io::StampedPose& p : io::read_tum(path)) {
        poses.push_back(p.pose);
    }
    return poses;
}

const Pose& pose_for(const std::vector<Pose>& poses, std::size_t frame, const fs::path& scene) {
    if (frame >= poses.size()) {
        throw InputError(scene.string() + ": frame " + std::to_string(frame) + " has no pose");
    }
    return poses[frame];
}

// Copies the inputs a downstream manifest needs into `out`.
io::SceneBundle carry_over(const io::SceneBundle& in, const fs::path& out) {
    io::SceneBundle b;
    b.intrinsics = out / "intrinsics.txt";
    b.poses = out / "poses.txt";
    fs::copy_file(in.intrinsics, b.intrinsics, fs::copy_options::overwrite_existing);
    fs::copy_file(in.poses, b.poses, fs::copy_options::overwrite_existing);
    b.gt_depth = in.gt_depth;
    b.gt_mesh = in.gt_mesh;
    b.correspondences = in.correspondences;
    return b;
}

std::vector<std::pair<std::size_t, DepthMap>> read_depth_entries(const std::map<std::size_t, fs::path>& entries) {
    std::vector<std::pair<std::size_t, DepthMap>> out;
    for (const auto& [frame, path] : entries) {
        out.emplace_back(frame, io::read_depth(path));
    }
    return out;
}

bool is_manifest(const fs::path& p) {
    return p.extension() == ".txt";
}

} // namespace

fs::path synth(const SynthSpec& spec, const Context& ctx) {
    return write_synth_bundle(synth_scene(spec), ctx.out);
}

fs::path align(const fs::path& scene, const Context& ctx) {
    const io::SceneBundle bundle = io::read_scene(scene);
    const AlignResult res = run_align(load_align_inputs(bundle), ctx.cfg);
    for (const std::string& w : res.warnings) {
        warn(ctx, w);
    }

    fs::create_directories(ctx.out / "aligned");
    io::SceneBundle out = carry_over(bundle, ctx.out);
    for (std::size_t p = 0; p < res.keyframes.size(); ++p) {
        const std::size_t frame = res.keyframes.entries[p].frame_id;
        const fs::path path = ctx.out / frame_file("aligned", frame);
        io::write_depth_raw(path, res.aligned[p]);
        out.depth[frame] = path;
    }
    io::write_text(ctx.out / "scales.txt", format_scale_report(res));
    if (ctx.dump_graph) {
        io::write_text(*ctx.dump_graph, format_graph_dump(res));
    }
    const fs::path manifest = ctx.out / "scene.txt";
    io::write_scene(manifest, out);
    return manifest;
}

fs::path fuse(const fs::path& scene, const Context& ctx) {
    const io::SceneBundle bundle = io::read_scene(scene);
    if (bundle.depth.empty()) {
        throw InputError(scene.string() + ": no depth entries to fuse");
    }
    const Intrinsics k = io::read_intrinsics(bundle.intrinsics);
    const std::vector<Pose> all_poses = read_poses(bundle.poses);
    std::vector<DepthMap> depths;
    std::vector<Pose> poses;
    for (auto& [frame, depth] : read_depth_entries(bundle.depth)) {
        poses.push_back(pose_for(all_poses, frame, scene));
        depths.push_back(std::move(depth));
    }
    const TsdfVolume volume = run_fuse(depths, poses, k, ctx.cfg);
    fs::create_directories(ctx.out);
    const fs::path tsdf = ctx.out / "tsdf.vol";
    io::write_volume_grid(tsdf, volume, false);
    io::write_volume_grid(ctx.out / "weight.vol", volume, true);
    return tsdf;
}

fs::path extract(const fs::path& tsdf, const fs::path& weights, const Context& ctx) {
    const TsdfVolume volume = io::read_volume(tsdf, weights, ctx.cfg.truncation);
    const TriangleMesh mesh = extract_mesh(volume);
    if (mesh.faces.empty()) {
        warn(ctx, "extracted mesh is empty");
    }
    fs::create_directories(ctx.out);
    const fs::path path = ctx.out / "mesh.ply";
    io::write_ply(path, mesh);
    return path;
}

fs::path render(const fs::path& mesh_path, const fs::path& scene, const Context& ctx) {
    const TriangleMesh mesh = io::read_ply(mesh_path);
    const io::SceneBundle bundle = io::read_scene(scene);
    const Intrinsics k = io::read_intrinsics(bundle.intrinsics);
    const std::vector<Pose> all_poses = read_poses(bundle.poses);
    std::vector<std::size_t> frames;
    for (const auto& entry : bundle.depth) {
        frames.push_back(entry.first);
    }
    if (frames.empty()) {
        for (std::size_t f = 0; f < all_poses.size(); ++f) {
            frames.push_back(f);
        }
    }
    std::vector<Pose> poses;
    for (std::size_t f : frames) {
        poses.push_back(pose_for(all_poses, f, scene));
    }
    const std::vector<DepthMap> rendered = run_render(mesh, poses, k);

    fs::create_directories(ctx.out / "rendered");
    io::SceneBundle out = carry_over(bundle, ctx.out);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const fs::path path = ctx.out / frame_file("rendered", frames[i]);
        io::write_depth_raw(path, rendered[i]);
        out.depth[frames[i]] = path;
    }
    const fs::path manifest = ctx.out / "scene.txt";
    io::write_scene(manifest, out);
    return manifest;
}

std::string eval_mesh(const fs::path& pred, const fs::path& gt, const Context& ctx) {
    const TriangleMesh p = io::read_ply(pred);
    const TriangleMesh g = io::read_ply(gt);
    try {
        return format_report(run_eval_mesh(p, g, ctx.cfg.tau, ctx.sample_density, ctx.seed));
    } catch (const EmptyCloud& e) {
        throw EmptyCloud(pred.string() + " vs " + gt.string() + ": " + e.what());
    }
}

std::string eval_depth(const fs::path& pred, const fs::path& gt, const Context& ctx) {
    std::map<std::size_t, fs::path> pred_files;
    std::map<std::size_t, fs::path> gt_files;
    if (is_manifest(pred)) {
        pred_files = io::read_scene(pred).depth;
    } else {
        pred_files[0] = pred;
    }
    if (is_manifest(gt)) {
        gt_files = io::read_scene(gt).gt_depth;
    } else {
        gt_files[0] = gt;
    }
    std::vector<DepthMap> p;
    std::vector<DepthMap> g;
    for (const auto& [frame, path] : pred_files) {
        const auto it = gt_files.find(frame);
        if (it == gt_files.end()) {
            continue;
        }
        p.push_back(io::read_depth(path));
        g.push_back(io::read_depth(it->second));
        if (p.back().width() != g.back().width() || p.back().height() != g.back().height()) {
            throw DimensionMismatch(path.string() + " vs " + it->second.string() + ": sizes differ");
        }
    }
    if (p.empty()) {
        throw NoValidPixels(pred.string() + " vs " + gt.string() + ": no frame has both prediction and ground truth");
    }
    try {
        return format_report(depth_metrics(p, g, ctx.cfg.depth_range()));
    } catch (const NoValidPixels& e) {
        throw NoValidPixels(pred.string() + " vs " + gt.string() + ": " + e.what());
    }
}

fs::path pipeline(const fs::path& scene, const Context& ctx) {
    Context stage = ctx;
    stage.out = ctx.out / "aligned_scene";
    const fs::path aligned = align(scene, stage);
    stage.out = ctx.out / "volume";
    stage.dump_graph.reset();
    const fs::path tsdf = fuse(aligned, stage);
    stage.out = ctx.out;
    const fs::path mesh = extract(tsdf, tsdf.parent_path() / "weight.vol", stage);
    stage.out = ctx.out / "rendered_scene";
    const fs::path rendered = render(mesh, aligned, stage);

    const io::SceneBundle bundle = io::read_scene(aligned);
    std::string report;
    if (bundle.gt_mesh) {
        report += eval_mesh(mesh, *bundle.gt_mesh, ctx);
    }
    if (!bundle.gt_depth.empty()) {
        report += eval_depth(rendered, rendered, ctx);
    }
    const fs::path path = ctx.out / "report.txt";
    io::write_text(path, report);
    return path;
}

} // namespace scalign::commands
