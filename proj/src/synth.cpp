#include "scalign/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "scalign/io.hpp"

namespace scalign {

void SynthSpec::validate() const {
    if (!(room.minCoeff() > 0.0) || !room.allFinite()) {
        throw InputError("synth: room dimensions must be positive");
    }
    if (camera_count < 2) {
        throw InputError("synth: need at least two cameras");
    }
    if (!(scale_lo > 0.0) || !(scale_hi >= scale_lo) || !std::isfinite(scale_hi)) {
        throw InputError("synth: require 0 < scale_lo <= scale_hi");
    }
    if (!(radius >= 0.0) || !(lattice_spacing > 0.0) || !(wall_margin >= 0.0)) {
        throw InputError("synth: radius, lattice spacing and margin must be non-negative");
    }
    if (!(std::abs(pitch_amplitude_deg) < 80.0)) {
        throw InputError("synth: pitch amplitude must stay below 80 degrees");
    }
    submaps.validate();
    k.validate();
}

TriangleMesh box_mesh(const Vec3& lo, const Vec3& hi) {
    TriangleMesh mesh;
    for (int i = 0; i < 8; ++i) {
        mesh.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
    }
    // Quads counter-clockwise seen from outside the box.
    const int quads[6][4] = {
        {0, 2, 3, 1}, // z = lo
        {4, 5, 7, 6}, // z = hi
        {0, 1, 5, 4}, // y = lo
        {2, 6, 7, 3}, // y = hi
        {0, 4, 6, 2}, // x = lo
        {1, 3, 7, 5}, // x = hi
    };
    for (const auto& q : quads) {
        const auto v = [&](int i) { return static_cast<std::uint32_t>(q[i]); };
        mesh.faces.push_back({v(0), v(1), v(2)});
        mesh.faces.push_back({v(0), v(2), v(3)});
    }
    return mesh;
}

DepthMap box_interior_depth(const Vec3& room, const Pose& pose, const Intrinsics& k) {
    DepthMap out(k.width, k.height);
    const Mat3& r = pose.rotation();
    const Vec3& o = pose.translation();
    for (int y = 0; y < k.height; ++y) {
        for (int x = 0; x < k.width; ++x) {
            const Vec3 dir = r * Vec3((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
            // The ray parameter along a camera-frame direction with unit z is
            // the z-depth itself.
            double t = std::numeric_limits<double>::infinity();
            for (int a = 0; a < 3; ++a) {
                if (dir[a] > 0.0) {
                    t = std::min(t, (room[a] - o[a]) / dir[a]);
                } else if (dir[a] < 0.0) {
                    t = std::min(t, -o[a] / dir[a]);
                }
            }
            out.at(x, y) = t;
        }
    }
    return out;
}

Pose look_along(const Vec3& position, const Vec3& forward) {
    const Vec3 f = forward.normalized();
    const Vec3 right = f.cross(Vec3::UnitZ()).normalized();
    const Vec3 down = f.cross(right);
    Mat3 r;
    r.col(0) = right;
    r.col(1) = down;
    r.col(2) = f;
    return {r, position};
}

namespace {

std::vector<Pose> circle_trajectory(const SynthSpec& spec) {
    const Vec3 center = 0.5 * spec.room;
    const double pitch_amp = spec.pitch_amplitude_deg * std::numbers::pi / 180.0;
    const double bob = std::min(0.15, 0.25 * spec.room.z());
    std::vector<Pose> poses;
    for (int i = 0; i < spec.camera_count; ++i) {
        const double theta = 2.0 * std::numbers::pi * i / spec.camera_count;
        const Vec3 radial(std::cos(theta), std::sin(theta), 0.0);
        const Vec3 position = center + spec.radius * radial + Vec3(0.0, 0.0, bob * std::sin(3.0 * theta));
        for (int a = 0; a < 3; ++a) {
            if (position[a] < spec.wall_margin || position[a] > spec.room[a] - spec.wall_margin) {
                throw InputError("synth: trajectory leaves the room");
            }
        }
        const Vec3 heading = spec.style == TrajectoryStyle::Outward ? radial : Vec3(-radial);
        const double pitch = pitch_amp * std::sin(spec.pitch_cycles * theta);
        poses.push_back(look_along(position, std::cos(pitch) * heading + std::sin(pitch) * Vec3::UnitZ()));
    }
    return poses;
}

// Points on the six walls at the given spacing, offset half a step from the
// edges.
std::vector<Vec3> surface_lattice(const Vec3& room, double spacing) {
    std::vector<Vec3> pts;
    for (int axis = 0; axis < 3; ++axis) {
        const int u = (axis + 1) % 3;
        const int v = (axis + 2) % 3;
        const int nu = static_cast<int>(std::floor(room[u] / spacing));
        const int nv = static_cast<int>(std::floor(room[v] / spacing));
        const double ou = 0.5 * (room[u] - (nu - 1) * spacing);
        const double ov = 0.5 * (room[v] - (nv - 1) * spacing);
        for (double side : {0.0, room[axis]}) {
            for (int i = 0; i < nu; ++i) {
                for (int j = 0; j < nv; ++j) {
                    Vec3 p;
                    p[axis] = side;
                    p[u] = ou + i * spacing;
                    p[v] = ov + j * spacing;
                    pts.push_back(p);
                }
            }
        }
    }
    return pts;
}

bool inside_image(const Vec2& px, const Intrinsics& k) {
    return px.x() >= 0.0 && px.y() >= 0.0 && px.x() <= k.width - 1 && px.y() <= k.height - 1;
}

} // namespace

SynthScene synth_scene(const SynthSpec& spec) {
    spec.validate();
    SynthScene s;
    s.room = spec.room;
    s.k = spec.k;
    s.poses = circle_trajectory(spec);
    s.gt_mesh = box_mesh(Vec3::Zero(), spec.room);
    for (const Pose& pose : s.poses) {
        s.gt_depths.push_back(box_interior_depth(spec.room, pose, spec.k));
    }

    s.keyframes = select_keyframes(s.poses, spec.t_max, spec.r_max);
    s.submaps = partition_submaps(s.keyframes.size(), spec.submaps);

    std::mt19937_64 rng(spec.seed);
    for (const Submap& sm : s.submaps) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const double c = spec.scale_lo + (spec.scale_hi - spec.scale_lo) * u;
        s.corruption.push_back(c);
        std::vector<DepthMap> maps;
        for (std::size_t p = sm.start; p <= sm.end; ++p) {
            const DepthMap& gt = s.gt_depths[s.keyframes.entries[p].frame_id];
            std::vector<double> values(gt.values().begin(), gt.values().end());
            for (double& d : values) {
                d *= c;
            }
            maps.emplace_back(gt.width(), gt.height(), std::move(values));
        }
        s.predictions.push_back(std::move(maps));
    }

    // The room interior is convex, so every lattice point in front of a
    // camera and inside its image is visible.
    const std::vector<Vec3> lattice = surface_lattice(spec.room, spec.lattice_spacing);
    const std::size_t max_sep = static_cast<std::size_t>(std::min(3, spec.submaps.n - 1));
    const std::size_t kf = s.keyframes.size();
    for (std::size_t a = 0; a < kf; ++a) {
        for (std::size_t b = a + 1; b < kf && b - a <= max_sep; ++b) {
            const Keyframe& ka = s.keyframes.entries[a];
            const Keyframe& kb = s.keyframes.entries[b];
            for (const Vec3& x : lattice) {
                const Projection pa = project(x, ka.pose, spec.k);
                const Projection pb = project(x, kb.pose, spec.k);
                if (pa.in_front && pb.in_front && inside_image(pa.pixel, spec.k) && inside_image(pb.pixel, spec.k)) {
                    s.correspondences.push_back({ka.frame_id, kb.frame_id, pa.pixel, pb.pixel});
                }
            }
        }
    }
    return s;
}

std::filesystem::path write_synth_bundle(const SynthScene& scene, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "gt");
    fs::create_directories(dir / "pred");
    io::SceneBundle bundle;
    bundle.intrinsics = dir / "intrinsics.txt";
    bundle.poses = dir / "poses.txt";
    bundle.correspondences = dir / "correspondences.txt";
    bundle.gt_mesh = dir / "gt_mesh.ply";

    io::write_intrinsics(bundle.intrinsics, scene.k);
    std::vector<io::StampedPose> stamped;
    for (std::size_t i = 0; i < scene.poses.size(); ++i) {
        stamped.push_back({static_cast<double>(i) / 30.0, scene.poses[i]});
    }
    io::write_tum(bundle.poses, stamped);
    io::write_correspondences(*bundle.correspondences, scene.correspondences);
    io::write_ply(*bundle.gt_mesh, scene.gt_mesh);

    char name[64];
    for (std::size_t f = 0; f < scene.gt_depths.size(); ++f) {
        std::snprintf(name, sizeof(name), "gt/frame_%04zu.dpth", f);
        io::write_depth_raw(dir / name, scene.gt_depths[f]);
        bundle.gt_depth[f] = dir / name;
    }
    std::string scales = "# submap first_frame last_frame factor\n";
    for (std::size_t m = 0; m < scene.submaps.size(); ++m) {
        const Submap& sm = scene.submaps[m];
        for (std::size_t p = sm.start; p <= sm.end; ++p) {
            const std::size_t frame = scene.keyframes.entries[p].frame_id;
            std::snprintf(name, sizeof(name), "pred/submap_%02zu_frame_%04zu.dpth", m, frame);
            io::write_depth_raw(dir / name, scene.predictions[m][p - sm.start]);
            bundle.submap_depth[{m, frame}] = dir / name;
        }
        char line[128];
        std::snprintf(line, sizeof(line), "%zu %zu %zu %.17g\n", m, scene.keyframes.entries[sm.start].frame_id,
                      scene.keyframes.entries[sm.end].frame_id, scene.corruption[m]);
        scales += line;
    }
    io::write_text(dir / "scales.txt", scales);
    const fs::path manifest = dir / "scene.txt";
    io::write_scene(manifest, bundle);
    return manifest;
}

} // namespace scalign
