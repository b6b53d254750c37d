#include <CLI11.hpp>

#include <iostream>

#include "scalign/commands.hpp"
#include "scalign/io.hpp"
#include "scalign/scale_graph.hpp"
#include "scalign/tsdf.hpp"

namespace cmd = scalign::commands;

int main(int argc, char** argv) {
    CLI::App app{"Scale alignment, TSDF fusion and evaluation for per-submap depth predictions"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir = ".";
    std::string dump_graph;
    std::uint64_t seed = 0;
    std::string profile;
    double density = scalign::kDefaultSampleDensity;
    app.add_option("--config", config_path, "Config file (key = value)");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--dump-graph", dump_graph, "Write scale-graph edges and nodes to this file");
    app.add_option("--seed", seed, "Seed for synthesis and surface sampling");
    app.add_option("--profile", profile, "Dataset profile")->check(CLI::IsMember({"scannet", "generic"}));
    app.add_option("--sample-density", density, "Surface samples per square meter for mesh evaluation")
        ->check(CLI::PositiveNumber);

    std::string scene, mesh, tsdf, weights, pred, gt;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic box-room bundle");
    scalign::SynthSpec spec;
    std::vector<double> room{spec.room.x(), spec.room.y(), spec.room.z()};
    std::string style = spec.style == scalign::TrajectoryStyle::Inward ? "inward" : "outward";
    synth->add_option("--room", room, "Room size x y z (m)")->expected(3);
    synth->add_option("--frames", spec.camera_count, "Camera count");
    synth->add_option("--style", style, "Trajectory style")->check(CLI::IsMember({"outward", "inward"}));
    synth->add_option("--radius", spec.radius, "Trajectory radius (m)");
    synth->add_option("--pitch-amplitude", spec.pitch_amplitude_deg, "Pitch oscillation amplitude (degrees)");
    synth->add_option("--pitch-cycles", spec.pitch_cycles, "Pitch oscillations per revolution");
    synth->add_option("--scale-lo", spec.scale_lo, "Lowest per-submap corruption factor");
    synth->add_option("--scale-hi", spec.scale_hi, "Highest per-submap corruption factor");

    auto* align = app.add_subcommand("align", "Recover per-submap scales and write aligned depths");
    align->add_option("scene", scene, "Scene manifest")->required();

    auto* fuse = app.add_subcommand("fuse", "Integrate the manifest's depth maps into a TSDF volume");
    fuse->add_option("scene", scene, "Scene manifest")->required();

    auto* extract = app.add_subcommand("extract", "Extract a mesh from a volume dump");
    extract->add_option("tsdf", tsdf, "TSDF dump")->required();
    extract->add_option("--weights", weights, "Weight dump (default: weight.vol next to the TSDF dump)");

    auto* render = app.add_subcommand("render", "Render depth maps from a mesh");
    render->add_option("mesh", mesh, "PLY mesh")->required();
    render->add_option("scene", scene, "Scene manifest")->required();

    auto* eval_mesh = app.add_subcommand("eval-mesh", "Compare a predicted mesh with a ground-truth mesh");
    eval_mesh->add_option("pred", pred, "Predicted PLY")->required();
    eval_mesh->add_option("gt", gt, "Ground-truth PLY")->required();

    auto* eval_depth = app.add_subcommand("eval-depth", "Compare predicted depth with ground truth");
    eval_depth->add_option("pred", pred, "Depth file or manifest")->required();
    eval_depth->add_option("gt", gt, "Depth file or manifest")->required();

    auto* pipeline = app.add_subcommand("pipeline", "Run align, fuse, extract, render and evaluation");
    pipeline->add_option("scene", scene, "Scene manifest")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const auto override_profile =
            profile.empty() ? std::nullopt : std::optional(scalign::parse_profile(profile));
        cmd::Context ctx;
        ctx.cfg = config_path.empty() ? scalign::parse_config("", override_profile)
                                      : scalign::load_config(config_path, override_profile);
        ctx.out = out_dir;
        if (!dump_graph.empty()) {
            ctx.dump_graph = dump_graph;
        }
        ctx.seed = seed;
        ctx.sample_density = density;
        ctx.log = &std::cerr;

        if (*synth) {
            spec.room = {room[0], room[1], room[2]};
            spec.style = style == "inward" ? scalign::TrajectoryStyle::Inward : scalign::TrajectoryStyle::Outward;
            spec.seed = seed;
            spec.submaps = ctx.cfg.submap();
            spec.t_max = ctx.cfg.t_max;
            spec.r_max = ctx.cfg.r_max;
            std::cout << cmd::synth(spec, ctx).string() << '\n';
        } else if (*align) {
            std::cout << cmd::align(scene, ctx).string() << '\n';
        } else if (*fuse) {
            std::cout << cmd::fuse(scene, ctx).string() << '\n';
        } else if (*extract) {
            const std::filesystem::path t(tsdf);
            const std::filesystem::path w = weights.empty() ? t.parent_path() / "weight.vol" : std::filesystem::path(weights);
            std::cout << cmd::extract(t, w, ctx).string() << '\n';
        } else if (*render) {
            std::cout << cmd::render(mesh, scene, ctx).string() << '\n';
        } else if (*eval_mesh || *eval_depth) {
            const std::string report = *eval_mesh ? cmd::eval_mesh(pred, gt, ctx) : cmd::eval_depth(pred, gt, ctx);
            std::cout << report;
            if (app.get_option("--out")->count() > 0) {
                std::filesystem::create_directories(ctx.out);
                scalign::io::write_text(ctx.out / "report.txt", report);
            }
        } else if (*pipeline) {
            const auto report = cmd::pipeline(scene, ctx);
            std::cout << scalign::io::read_text(report);
        }
    } catch (const scalign::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "pipeline failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
