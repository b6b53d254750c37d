// Acceptance checks for the toolkit. Prints one PASS/FAIL line per criterion
// and exits non-zero when any fails. Usage: scalign_acceptance <scalign-cli>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <Eigen/Dense>

#include "scalign/anchors.hpp"
#include "scalign/commands.hpp"
#include "scalign/io.hpp"
#include "scalign/median.hpp"
#include "scalign/metrics.hpp"
#include "scalign/pipeline.hpp"
#include "scalign/scale_graph.hpp"
#include "scalign/synth.hpp"
#include "test_util.hpp"

using namespace scalign;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    g_failures += o.pass ? 0 : 1;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c, d);
    return buf;
}

// Rows of a whitespace table, skipping '#' comments.
std::vector<std::vector<double>> read_table(const fs::path& path) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(io::read_text(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ls(line);
        std::vector<double> row{std::istream_iterator<double>(ls), {}};
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---- 1, 4: alignment and render round trip on a corrupted synthetic room ----

struct AlignedRoom {
    fs::path root;
    fs::path aligned_manifest;
    double align_seconds = 0.0;
};

AlignedRoom align_corrupted_room(const fs::path& root) {
    fs::remove_all(root);
    SynthSpec spec;
    spec.camera_count = 40;
    spec.seed = 7;
    spec.scale_lo = 0.5;
    spec.scale_hi = 2.0;
    commands::Context ctx;
    ctx.out = root / "bundle";
    const fs::path scene = commands::synth(spec, ctx);
    AlignedRoom out;
    out.root = root;
    const auto t0 = Clock::now();
    ctx.out = root / "aligned";
    out.aligned_manifest = commands::align(scene, ctx);
    out.align_seconds = seconds_since(t0);
    return out;
}

Outcome check_scale_recovery(const AlignedRoom& room) {
    const auto injected = read_table(room.root / "bundle" / "scales.txt");
    const auto solved = read_table(room.root / "aligned" / "scales.txt");
    if (injected.size() != 9 || solved.size() != 9) {
        return {false, "expected 9 submaps, got " + std::to_string(solved.size())};
    }
    std::vector<double> prod;
    for (std::size_t m = 0; m < 9; ++m) {
        prod.push_back(injected[m][3] * solved[m][5]);
    }
    const auto [lo, hi] = std::minmax_element(prod.begin(), prod.end());
    const double spread = *hi / *lo - 1.0;
    const bool ok = spread < 0.01 && room.align_seconds < 30.0;
    return {ok, fmt("max relative spread of s*·c = %.3g (< 0.01), align %.2f s (< 30 s)", spread, room.align_seconds)};
}

Outcome check_render_round_trip(const AlignedRoom& room) {
    const io::SceneBundle b = io::read_scene(room.aligned_manifest);
    const Intrinsics k = io::read_intrinsics(b.intrinsics);
    const auto tum = io::read_tum(b.poses);
    std::vector<DepthMap> depths;
    std::vector<Pose> poses;
    for (const auto& [frame, path] : b.depth) {
        depths.push_back(io::read_depth(path));
        poses.push_back(tum.at(frame).pose);
    }
    const PipelineConfig cfg;
    const FusionResult fused = run_fuse_extract(depths, poses, k, cfg);
    const auto rendered = run_render(fused.mesh, poses, k);
    const DepthValidityRange range = cfg.depth_range();
    const auto in_range = [&](double d) { return d >= range.epsilon && d <= range.d_max; };
    double sq = 0.0;
    std::size_t both = 0;
    std::size_t input_valid = 0;
    for (std::size_t f = 0; f < depths.size(); ++f) {
        for (std::size_t i = 0; i < depths[f].values().size(); ++i) {
            const double d = depths[f].values()[i];
            const double r = rendered[f].values()[i];
            if (!in_range(d)) {
                continue;
            }
            ++input_valid;
            if (in_range(r)) {
                ++both;
                sq += (r - d) * (r - d);
            }
        }
    }
    const double rms = std::sqrt(sq / static_cast<double>(std::max<std::size_t>(both, 1)));
    const double comp = static_cast<double>(both) / static_cast<double>(std::max<std::size_t>(input_valid, 1));
    const bool ok = both > 0 && rms <= cfg.voxel_size && comp >= 0.98;
    return {ok, fmt("rms %.4f m (<= %.2f), completeness %.4f (>= 0.98)", rms, cfg.voxel_size, comp)};
}

// ---- 2: optimizer oracle ----

std::vector<double> dense_solve(const ScaleGraphProblem& p) {
    const auto n = static_cast<Eigen::Index>(p.node_count);
    Eigen::MatrixXd a = p.lambda * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        b[i] = p.lambda * p.priors[static_cast<std::size_t>(i)];
    }
    for (const ScaleEdge& e : p.edges) {
        const auto i = static_cast<Eigen::Index>(e.i);
        const auto j = static_cast<Eigen::Index>(e.j);
        a(i, i) += e.weight;
        a(j, j) += e.weight;
        a(i, j) -= e.weight;
        a(j, i) -= e.weight;
        b[i] += e.weight * e.rho;
        b[j] -= e.weight * e.rho;
    }
    const Eigen::VectorXd x = a.fullPivLu().solve(b);
    return {x.data(), x.data() + n};
}

ScaleGraphProblem random_problem(testutil::Rng& rng) {
    ScaleGraphProblem p;
    p.node_count = static_cast<std::size_t>(rng.integer(1, 12));
    p.lambda = std::exp(rng.uniform(std::log(1e-3), 0.0));
    const double l5 = std::log(5.0);
    for (std::size_t i = 0; i < p.node_count; ++i) {
        p.priors.push_back(rng.uniform(-l5, l5));
    }
    for (std::size_t i = 0; i + 1 < p.node_count; ++i) {
        p.edges.push_back({i, i + 1, rng.uniform(-l5, l5), rng.uniform(1e-3, 1.0), 100});
    }
    const int extra = p.node_count > 2 ? rng.integer(0, 4) : 0;
    for (int e = 0; e < extra; ++e) {
        const auto i = static_cast<std::size_t>(rng.integer(0, static_cast<int>(p.node_count) - 1));
        const auto j = static_cast<std::size_t>(rng.integer(0, static_cast<int>(p.node_count) - 1));
        if (i != j) {
            p.edges.push_back({std::min(i, j), std::max(i, j), rng.uniform(-l5, l5), rng.uniform(1e-3, 1.0), 10});
        }
    }
    return p;
}

Outcome check_optimizer_oracle() {
    testutil::Rng rng(2);
    const auto t0 = Clock::now();
    double worst_coord = 0.0;
    double worst_grad = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const ScaleGraphProblem p = random_problem(rng);
        const ScaleSolution s = solve_scales(p);
        const std::vector<double> oracle = dense_solve(p);
        const std::vector<double> g = p.gradient(s.log_scales);
        std::vector<double> x = s.log_scales;
        for (std::size_t i = 0; i < p.node_count; ++i) {
            worst_coord = std::max(worst_coord, std::abs(s.log_scales[i] - oracle[i]));
            const double h = 1e-6;
            const double x0 = x[i];
            x[i] = x0 + h;
            const double fp = p.objective(x);
            x[i] = x0 - h;
            const double fm = p.objective(x);
            x[i] = x0;
            const double fd = (fp - fm) / (2.0 * h);
            // Both sides vanish at the optimum, so the relative error is taken
            // against the unit curvature scale there.
            worst_grad = std::max(worst_grad, std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), 1.0}));
        }
    }
    const double secs = seconds_since(t0);
    const bool ok = worst_coord < 1e-8 && worst_grad < 1e-5 && secs < 5.0;
    return {ok, fmt("max |x - x_dense| %.3g (< 1e-8), gradient rel err %.3g (< 1e-5), %.2f s (< 5 s)", worst_coord,
                    worst_grad, secs)};
}

// ---- 3: fusion and extraction fidelity ----

Outcome check_fusion_fidelity() {
    const auto t0 = Clock::now();
    const SynthScene s = synth_scene(SynthSpec{});
    PipelineConfig cfg;
    cfg.voxel_size = 0.04;
    cfg.truncation = 0.12;
    const FusionResult f = run_fuse_extract(s.gt_depths, s.poses, s.k, cfg);
    const MeshMetrics m = run_eval_mesh(f.mesh, s.gt_mesh, 0.05);
    const double secs = seconds_since(t0);
    const bool ok = m.f1 > 0.95 && m.acc < 2.0 && secs < 60.0;
    return {ok, fmt("f1 %.4f (> 0.95), acc %.3f cm (< 2), %.2f s (< 60 s)", m.f1, m.acc, secs)};
}

// ---- 5: triangulation ----

struct PairSample {
    Pose a;
    Pose b;
    Vec3 x;
    Vec2 pa;
    Vec2 pb;
};

const Intrinsics kTriCam{500.0, 500.0, 319.5, 239.5, 640, 480};

bool in_image(const Vec2& p) {
    return p.x() >= 0.0 && p.x() <= kTriCam.width - 1 && p.y() >= 0.0 && p.y() <= kTriCam.height - 1;
}

// Random camera pair viewing a random point: camera b sits at a comparable
// distance from the point, 5 to 60 degrees around it from camera a, and
// looks roughly at it.
PairSample random_pair(testutil::Rng& rng) {
    for (;;) {
        PairSample s;
        s.a = rng.pose(std::numbers::pi, 2.0);
        s.pa = Vec2(rng.uniform(0.0, kTriCam.width - 1), rng.uniform(0.0, kTriCam.height - 1));
        s.x = backproject(s.pa, rng.uniform(1.0, 10.0), s.a, kTriCam);
        Vec3 axis = rng.vec(-1.0, 1.0);
        if (axis.norm() < 1e-3) {
            continue;
        }
        const double angle = rng.uniform(5.0, 60.0) * std::numbers::pi / 180.0;
        const Mat3 turn = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
        const Vec3 center_b = s.x + rng.uniform(0.7, 1.3) * (turn * (s.a.translation() - s.x));
        const Pose look = look_along(center_b, s.x - center_b);
        s.b = Pose(look.rotation() * rng.rotation(0.3), center_b);
        const Projection pb = project(s.x, s.b, kTriCam);
        if (!pb.in_front || !in_image(pb.pixel)) {
            continue;
        }
        s.pb = pb.pixel;
        return s;
    }
}

// Pixel of a point through a camera regardless of which side it is on.
Vec2 raw_pixel(const Vec3& x, const Pose& pose) {
    const Vec3 c = pose.to_camera(x);
    return {kTriCam.fx * c.x() / c.z() + kTriCam.cx, kTriCam.fy * c.y() / c.z() + kTriCam.cy};
}

Outcome check_triangulation() {
    testutil::Rng rng(5);
    const int trials = 1000;
    int accepted = 0;
    double worst = 0.0;
    int reproj = 0;
    int chirality = 0;
    std::string first_bad;
    for (int t = 0; t < trials; ++t) {
        const PairSample s = random_pair(rng);
        const TriangulationResult exact = triangulate(s.pa, s.a, s.pb, s.b, kTriCam, 2.0);
        if (exact.accepted()) {
            ++accepted;
            worst = std::max(worst, (*exact.point - s.x).norm());
        }

        // 10 px off the epipolar line of pa in image b.
        const Vec3 ray = s.x - s.a.translation();
        const Vec2 near = project(s.a.translation() + 0.9 * ray, s.b, kTriCam).pixel;
        const Vec2 far = project(s.a.translation() + 1.1 * ray, s.b, kTriCam).pixel;
        const Vec2 along = (far - near).normalized();
        const Vec2 off = s.pb + 10.0 * Vec2(-along.y(), along.x());
        const TriangulationResult perturbed = triangulate(s.pa, s.a, off, s.b, kTriCam, 2.0);
        reproj += perturbed.status == TriangulationStatus::ReprojectionReject ? 1 : 0;

        // Mirror the point through one camera center: same pixel in that
        // camera, but behind it.
        TriangulationResult behind;
        if (t % 2 == 0) {
            const Vec3 xm = 2.0 * s.a.translation() - s.x;
            behind = triangulate(s.pa, s.a, raw_pixel(xm, s.b), s.b, kTriCam, 2.0);
        } else {
            const Vec3 xm = 2.0 * s.b.translation() - s.x;
            behind = triangulate(raw_pixel(xm, s.a), s.a, s.pb, s.b, kTriCam, 2.0);
        }
        chirality += behind.status == TriangulationStatus::ChiralityReject ? 1 : 0;
        if (first_bad.empty() && behind.status != TriangulationStatus::ChiralityReject) {
            first_bad = std::string(", first non-chirality status ") + to_string(behind.status);
        }
    }
    const bool ok = accepted == trials && worst < 1e-6 && reproj == trials && chirality == trials;
    return {ok, fmt("exact accepted %.0f/1000 with max error %.3g m (< 1e-6), perturbed ReprojectionReject %.0f/1000, "
                    "behind ChiralityReject %.0f/1000",
                    accepted, worst, reproj, chirality) +
                    first_bad};
}

// ---- 6: metric oracle ----

double brute_nearest(const Vec3& q, const std::vector<Vec3>& pts) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& p : pts) {
        best = std::min(best, (p - q).squaredNorm());
    }
    return std::sqrt(best);
}

MeshMetrics brute_metrics(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt, double tau) {
    MeshMetrics m;
    double acc = 0.0;
    double comp = 0.0;
    double prec = 0.0;
    double rec = 0.0;
    for (const Vec3& p : pred) {
        const double d = brute_nearest(p, gt);
        acc += d;
        prec += d < tau ? 1.0 : 0.0;
    }
    for (const Vec3& g : gt) {
        const double d = brute_nearest(g, pred);
        comp += d;
        rec += d < tau ? 1.0 : 0.0;
    }
    m.acc = 100.0 * acc / static_cast<double>(pred.size());
    m.comp = 100.0 * comp / static_cast<double>(gt.size());
    m.cham = 0.5 * (m.acc + m.comp);
    m.prec = prec / static_cast<double>(pred.size());
    m.recall = rec / static_cast<double>(gt.size());
    m.f1 = m.prec + m.recall > 0.0 ? 2.0 * m.prec * m.recall / (m.prec + m.recall) : 0.0;
    return m;
}

double metric_gap(const MeshMetrics& a, const MeshMetrics& b) {
    return std::max({std::abs(a.acc - b.acc), std::abs(a.comp - b.comp), std::abs(a.cham - b.cham),
                     std::abs(a.prec - b.prec), std::abs(a.recall - b.recall), std::abs(a.f1 - b.f1)});
}

Outcome check_metric_oracle() {
    testutil::Rng rng(6);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Vec3> a(static_cast<std::size_t>(rng.integer(1, 2000)));
        std::vector<Vec3> b(static_cast<std::size_t>(rng.integer(1, 2000)));
        const double spread = rng.uniform(0.05, 3.0);
        for (Vec3& p : a) {
            p = rng.vec(-spread, spread);
        }
        for (Vec3& p : b) {
            p = rng.vec(-spread, spread) + Vec3(0.05, 0.0, 0.0);
        }
        const double tau = rng.uniform(0.01, 0.3);
        worst = std::max(worst, metric_gap(mesh_metrics(a, b, tau), brute_metrics(a, b, tau)));
    }

    // Lattice clouds: identity and uniform shifts of 3 cm and 7 cm.
    std::vector<Vec3> gt;
    for (int z = 0; z < 8; ++z) {
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) {
                gt.emplace_back(0.25 * x, 0.25 * y, 0.25 * z);
            }
        }
    }
    const auto shift = [&](const Vec3& by) {
        std::vector<Vec3> out = gt;
        for (Vec3& p : out) {
            p += by;
        }
        return out;
    };
    const MeshMetrics id = mesh_metrics(gt, gt, 0.05);
    const bool identity_ok = id.acc == 0.0 && id.comp == 0.0 && id.prec == 1.0 && id.recall == 1.0 && id.f1 == 1.0;
    const MeshMetrics s3 = mesh_metrics(shift({0.03, 0.0, 0.0}), gt, 0.05);
    const bool shift3_ok = std::abs(s3.acc - 3.0) < 1e-12 && std::abs(s3.comp - 3.0) < 1e-12 && s3.prec == 1.0 &&
                           s3.recall == 1.0;
    const auto pred7 = shift({0.0, 0.07, 0.0});
    const MeshMetrics s7 = mesh_metrics(pred7, gt, 0.05);
    const bool shift7_ok = s7.prec == 0.0 && s7.recall == 0.0 && s7.f1 == 0.0 && std::abs(s7.acc - 7.0) < 1e-12 &&
                           metric_gap(s7, brute_metrics(pred7, gt, 0.05)) <= 1e-9;
    const bool ok = worst <= 1e-9 && identity_ok && shift3_ok && shift7_ok;
    const auto word = [](bool b) { return std::string(b ? "ok" : "FAILED"); };
    return {ok, fmt("max deviation from brute force %.3g (<= 1e-9)", worst) + "; identity " + word(identity_ok) +
                    ", 3 cm shift " + word(shift3_ok) + ", 7 cm shift " + word(shift7_ok)};
}

// ---- 7: median robustness ----

Outcome check_median_robustness() {
    testutil::Rng rng(8);
    int anchor_exact = 0;
    int edge_exact = 0;
    const int trials = 500;
    for (int t = 0; t < trials; ++t) {
        const double scale = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
        const int n = rng.integer(1, 60);
        const int outliers = static_cast<int>(std::floor(0.4 * n * rng.uniform()));
        const bool high = rng.uniform() < 0.5;
        const auto outlier_ratio = [&] {
            // Arbitrary magnitude, all on one side or mixed.
            const double mag = std::exp(rng.uniform(0.0, std::log(1e6)));
            const bool up = rng.uniform() < 0.5 ? high : !high;
            return (t % 3 == 0 ? up : high) ? scale * (1.0 + mag) : scale / (1.0 + mag);
        };

        // Anchors on a depth map whose values are powers of two, so the
        // inlier ratios are exactly `scale`.
        DepthMap pred(n, 1);
        std::vector<TriangulatedAnchor> anchors;
        for (int i = 0; i < n; ++i) {
            const double d = std::ldexp(1.0, rng.integer(-3, 4));
            pred.at(i, 0) = d;
            TriangulatedAnchor a;
            a.pixel = Vec2(i, 0);
            a.depth_triangulated = i < outliers ? outlier_ratio() * d : scale * d;
            anchors.push_back(a);
        }
        std::swap(anchors[0], anchors[static_cast<std::size_t>(rng.integer(0, n - 1))]);
        const auto s0 = initial_scale(anchors, pred);
        anchor_exact += s0 && *s0 == scale ? 1 : 0;

        // Pooled overlap ratios across a few frames.
        std::vector<std::vector<double>> sets(static_cast<std::size_t>(rng.integer(1, 4)));
        const int m = rng.integer(1, 400);
        const int bad = static_cast<int>(std::floor(0.4 * m * rng.uniform()));
        for (int i = 0; i < m; ++i) {
            sets[static_cast<std::size_t>(rng.integer(0, static_cast<int>(sets.size()) - 1))].push_back(
                i < bad ? outlier_ratio() : scale);
        }
        const RelativeScale rel = edge_relative_scale(sets, EdgeWeighting::for_overlap(sets.size(), 100));
        edge_exact += rel.r == scale ? 1 : 0;
    }
    const bool ok = anchor_exact == trials && edge_exact == trials;
    return {ok, fmt("initial_scale exact %.0f/500, edge_relative_scale exact %.0f/500", anchor_exact, edge_exact)};
}

// ---- 8: loss formulas ----

SupervisionSample sample(double occupancy, double sdf_gt, double prob, double logit) {
    SupervisionSample s;
    s.occupancy = occupancy;
    s.sdf_gt = sdf_gt;
    s.occupancy_prob = prob;
    s.sdf_logit = logit;
    return s;
}

Outcome check_losses() {
    const double e1 = std::numbers::e - 1.0;
    const double tol = 1e-9;
    int passed = 0;
    int total = 0;
    std::string failed;
    const auto expect = [&](const char* name, bool ok) {
        ++total;
        passed += ok ? 1 : 0;
        if (!ok) {
            failed += std::string(" ") + name;
        }
    };
    const auto near = [&](double v, double want) { return std::abs(v - want) <= tol; };

    expect("t(0)", log_transform(0.0) == 0.0);
    expect("t(e-1)", near(log_transform(e1), 1.0) && near(log_transform(-e1), -1.0));
    expect("t(3)", near(log_transform(3.0), std::log(4.0)));

    std::vector<SupervisionSample> matched;
    for (double logit : {-1.5, -0.2, 0.0, 0.7, 2.5}) {
        matched.push_back(sample(1.0, std::tanh(logit), 0.5, logit));
    }
    expect("sdf zero residual", sdf_loss(matched) && near(*sdf_loss(matched), 0.0));
    const std::vector<SupervisionSample> single{sample(1.0, e1, 0.5, 0.0)};
    expect("sdf single sample", sdf_loss(single) && near(*sdf_loss(single), 1.0));
    const std::vector<SupervisionSample> empty_sdf{sample(0.0, 0.4, 0.3, 1.0), sample(0.0, -0.1, 0.6, -1.0)};
    expect("sdf empty guard", !sdf_loss(empty_sdf).has_value());

    const std::vector<SupervisionSample> half{sample(0.0, 0.0, 0.5, 0.0), sample(1.0, 0.0, 0.5, 0.0)};
    expect("occ max entropy", near(occ_loss(half), std::log(2.0)));
    bool limit_ok = true;
    double previous = std::numeric_limits<double>::infinity();
    for (double eps : {1e-3, 1e-6, 1e-9, 1e-12}) {
        const std::vector<SupervisionSample> c{sample(0.0, 0.0, eps, 0.0), sample(1.0, 0.0, 1.0 - eps, 0.0)};
        const double l = occ_loss(c);
        limit_ok = limit_ok && l < previous && l <= 1.01 * eps;
        previous = l;
    }
    expect("occ confident limit", limit_ok && previous <= tol);
    const std::vector<SupervisionSample> inv_e{sample(1.0, 0.0, 1.0 / std::numbers::e, 0.0)};
    expect("occ 1/e", near(occ_loss(inv_e), 1.0));

    const std::vector<SupervisionSample> zero{sample(1.0, std::tanh(0.3), 1.0 - 1e-12, 0.3)};
    expect("total zero", near(total_loss(zero), 0.0));
    const std::vector<SupervisionSample> no_sdf{sample(0.0, 0.0, 0.5, 0.0)};
    expect("total sdf absent", near(total_loss(no_sdf), std::log(2.0)));
    const std::vector<SupervisionSample> both{sample(1.0, e1, 1.0 / std::numbers::e, 0.0)};
    expect("total additivity", near(total_loss(both), 2.0));

    return {passed == total, fmt("%.0f/%.0f examples within 1e-9", passed, total) + failed};
}

// ---- 9: determinism ----

int run_cli(const std::string& cli, const std::string& args) {
    const std::string cmd = "\"" + cli + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

Outcome check_determinism(const std::string& cli, const fs::path& root) {
    fs::remove_all(root);
    if (run_cli(cli, "--out " + quoted(root / "bundle") + " --seed 3 synth --frames 24 --scale-lo 0.5 --scale-hi 2") !=
        0) {
        return {false, "synth failed"};
    }
    for (const char* run : {"run_a", "run_b"}) {
        if (run_cli(cli, "--out " + quoted(root / run) + " --seed 11 pipeline " + quoted(root / "bundle" / "scene.txt")) !=
            0) {
            return {false, std::string("pipeline failed in ") + run};
        }
    }
    std::size_t compared = 0;
    std::size_t plys = 0;
    std::size_t depths = 0;
    std::size_t reports = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root / "run_a")) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const fs::path rel = fs::relative(entry.path(), root / "run_a");
        const fs::path other = root / "run_b" / rel;
        if (!fs::exists(other) || file_bytes(entry.path()) != file_bytes(other)) {
            return {false, "differs: " + rel.string()};
        }
        ++compared;
        const std::string ext = rel.extension().string();
        plys += ext == ".ply" ? 1 : 0;
        depths += ext == ".dpth" ? 1 : 0;
        reports += rel.filename() == "report.txt" ? 1 : 0;
    }
    const bool ok = plys > 0 && depths > 0 && reports > 0;
    return {ok, fmt("%.0f files bit-identical across two runs (%.0f ply, %.0f depth, %.0f report)",
                    static_cast<double>(compared), static_cast<double>(plys), static_cast<double>(depths),
                    static_cast<double>(reports))};
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <scalign-cli> [work-dir]\n", argv[0]);
        return 2;
    }
    const std::string cli = argv[1];
    const fs::path work = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "scalign_acceptance";
    fs::create_directories(work);

    AlignedRoom room;
    std::string room_error;
    try {
        room = align_corrupted_room(work / "room");
    } catch (const std::exception& e) {
        room_error = e.what();
    }
    const auto needs_room = [&](Outcome (*check)(const AlignedRoom&)) {
        return [&, check]() -> Outcome {
            if (!room_error.empty()) {
                return {false, "alignment failed: " + room_error};
            }
            return check(room);
        };
    };

    report(1, "scale recovery end-to-end", needs_room(check_scale_recovery));
    report(2, "optimizer oracle", check_optimizer_oracle);
    report(3, "fusion/extraction fidelity", check_fusion_fidelity);
    report(4, "render round-trip", needs_room(check_render_round_trip));
    report(5, "triangulation correctness", check_triangulation);
    report(6, "metric oracle", check_metric_oracle);
    report(7, "median robustness", check_median_robustness);
    report(8, "loss formulas", check_losses);
    report(9, "determinism", [&] { return check_determinism(cli, work / "determinism"); });

    fs::remove_all(work);
    return g_failures == 0 ? 0 : 1;
}
