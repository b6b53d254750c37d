#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "scalign/metrics.hpp"
#include "scalign/synth.hpp"
#include "test_util.hpp"

using namespace scalign;

namespace {

const DepthValidityRange kRange{0.05, 20.0};
const double kE1 = std::numbers::e - 1.0;

double brute_nearest(const Vec3& q, std::span<const Vec3> pts) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& p : pts) {
        best = std::min(best, (p - q).squaredNorm());
    }
    return std::sqrt(best);
}

MeshMetrics brute_metrics(std::span<const Vec3> pred, std::span<const Vec3> gt, double tau) {
    MeshMetrics m;
    m.tau = tau;
    double acc = 0.0;
    double comp = 0.0;
    std::size_t prec = 0;
    std::size_t rec = 0;
    for (const Vec3& p : pred) {
        const double d = brute_nearest(p, gt);
        acc += d;
        prec += d < tau ? 1 : 0;
    }
    for (const Vec3& g : gt) {
        const double d = brute_nearest(g, pred);
        comp += d;
        rec += d < tau ? 1 : 0;
    }
    m.acc = 100.0 * acc / static_cast<double>(pred.size());
    m.comp = 100.0 * comp / static_cast<double>(gt.size());
    m.cham = 0.5 * (m.acc + m.comp);
    m.prec = static_cast<double>(prec) / static_cast<double>(pred.size());
    m.recall = static_cast<double>(rec) / static_cast<double>(gt.size());
    m.f1 = m.prec + m.recall > 0.0 ? 2.0 * m.prec * m.recall / (m.prec + m.recall) : 0.0;
    return m;
}

std::vector<Vec3> grid_points() {
    std::vector<Vec3> pts;
    for (int z = 0; z < 8; ++z) {
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) {
                pts.emplace_back(0.25 * x, 0.25 * y, 0.25 * z);
            }
        }
    }
    return pts;
}

std::vector<Vec3> shifted(std::vector<Vec3> pts, const Vec3& by) {
    for (Vec3& p : pts) {
        p += by;
    }
    return pts;
}

SupervisionSample sample(double occupancy, double sdf_gt, double prob, double logit) {
    SupervisionSample s;
    s.occupancy = occupancy;
    s.sdf_gt = sdf_gt;
    s.occupancy_prob = prob;
    s.sdf_logit = logit;
    return s;
}

} // namespace

TEST_CASE("mesh_metrics: identity") {
    const auto pts = grid_points();
    const MeshMetrics m = mesh_metrics(pts, pts, 0.05);
    CHECK(m.acc == 0.0);
    CHECK(m.comp == 0.0);
    CHECK(m.cham == 0.0);
    CHECK(m.prec == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
}

TEST_CASE("mesh_metrics: shift below threshold") {
    const auto gt = grid_points();
    const auto pred = shifted(gt, {0.03, 0.0, 0.0});
    const MeshMetrics m = mesh_metrics(pred, gt, 0.05);
    CHECK(std::abs(m.acc - 3.0) < 1e-12);
    CHECK(std::abs(m.comp - 3.0) < 1e-12);
    CHECK(m.prec == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
}

TEST_CASE("mesh_metrics: shift above threshold") {
    const auto gt = grid_points();
    const auto pred = shifted(gt, {0.0, 0.07, 0.0});
    const MeshMetrics m = mesh_metrics(pred, gt, 0.05);
    const MeshMetrics b = brute_metrics(pred, gt, 0.05);
    CHECK(std::abs(m.acc - 7.0) < 1e-12);
    CHECK(m.prec == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
    CHECK(m.acc == b.acc);
    CHECK(m.comp == b.comp);
}

TEST_CASE("mesh_metrics: matches brute force on random clouds") {
    testutil::Rng rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<Vec3> a(static_cast<std::size_t>(rng.integer(1, 800)));
        std::vector<Vec3> b(static_cast<std::size_t>(rng.integer(1, 800)));
        // Mix of spread-out, clustered and degenerate (planar) clouds.
        const double spread = rng.uniform(0.01, 3.0);
        const bool flat = trial % 5 == 0;
        for (Vec3& p : a) {
            p = rng.vec(-spread, spread);
            if (flat) {
                p.z() = 0.0;
            }
        }
        for (Vec3& p : b) {
            p = rng.vec(-spread, spread) + Vec3(0.1, 0.0, 0.0);
            if (flat) {
                p.z() = 0.0;
            }
        }
        const double tau = rng.uniform(0.01, 0.3);
        const MeshMetrics m = mesh_metrics(a, b, tau);
        const MeshMetrics o = brute_metrics(a, b, tau);
        CHECK(std::abs(m.acc - o.acc) <= 1e-9);
        CHECK(std::abs(m.comp - o.comp) <= 1e-9);
        CHECK(m.prec == o.prec);
        CHECK(m.recall == o.recall);
        CHECK(std::abs(m.f1 - o.f1) <= 1e-12);
        CHECK(std::abs(m.cham - 0.5 * (m.acc + m.comp)) <= 1e-12);

        // Swapping the clouds swaps the directional terms.
        const MeshMetrics s = mesh_metrics(b, a, tau);
        CHECK(s.acc == m.comp);
        CHECK(s.comp == m.acc);
        CHECK(s.prec == m.recall);
        CHECK(s.recall == m.prec);
        CHECK(std::abs(s.f1 - m.f1) <= 1e-15);
        CHECK(std::abs(s.cham - m.cham) <= 1e-12);
    }
}

TEST_CASE("PointIndex: nearest distance with far queries and duplicates") {
    testutil::Rng rng(5);
    std::vector<Vec3> pts(300);
    for (Vec3& p : pts) {
        p = rng.vec(0.0, 1.0);
    }
    pts.push_back(pts[3]);
    const PointIndex index(pts);
    for (int i = 0; i < 200; ++i) {
        const Vec3 q = rng.vec(-20.0, 20.0);
        CHECK(std::abs(index.nearest_distance(q) - brute_nearest(q, pts)) <= 1e-12);
    }
    CHECK(index.nearest_distance(pts[3]) == 0.0);
    const PointIndex empty(std::span<const Vec3>{});
    CHECK(std::isinf(empty.nearest_distance(Vec3::Zero())));
}

TEST_CASE("mesh_metrics: empty clouds throw") {
    const auto pts = grid_points();
    CHECK_THROWS_AS(mesh_metrics(std::vector<Vec3>{}, pts, 0.05), EmptyCloud);
    CHECK_THROWS_AS(mesh_metrics(pts, std::vector<Vec3>{}, 0.05), EmptyCloud);
}

TEST_CASE("sample_surface: count, determinism and support") {
    const TriangleMesh box = box_mesh(Vec3::Zero(), Vec3(1.0, 2.0, 0.5));
    const auto a = sample_surface(box, 1000.0, 3);
    const auto b = sample_surface(box, 1000.0, 3);
    const auto c = sample_surface(box, 1000.0, 4);
    CHECK(a.size() == static_cast<std::size_t>(std::ceil(box.surface_area() * 1000.0)));
    CHECK(a == b);
    CHECK(a != c);
    for (const Vec3& p : a) {
        const double face = std::min({std::abs(p.x()), std::abs(p.x() - 1.0), std::abs(p.y()), std::abs(p.y() - 2.0),
                                      std::abs(p.z()), std::abs(p.z() - 0.5)});
        CHECK(face < 1e-12);
    }
    // Area weighting: the two large faces (2 x 1) hold 4 of the 7 area units.
    const auto big = std::count_if(a.begin(), a.end(), [](const Vec3& p) {
        return std::abs(p.z()) < 1e-12 || std::abs(p.z() - 0.5) < 1e-12;
    });
    CHECK(static_cast<double>(big) / static_cast<double>(a.size()) == doctest::Approx(4.0 / 7.0).epsilon(0.05));
    CHECK(sample_surface(TriangleMesh{}, 1000.0, 0).empty());
}

TEST_CASE("depth_metrics: identity") {
    DepthMap gt(4, 3);
    for (int i = 0; i < 12; ++i) {
        gt.values()[static_cast<std::size_t>(i)] = 0.5 + 0.25 * i;
    }
    const DepthMetrics m = depth_metrics(gt, gt, kRange);
    CHECK(m.abs_rel == 0.0);
    CHECK(m.abs_diff == 0.0);
    CHECK(m.sq_rel == 0.0);
    CHECK(m.delta_105 == 1.0);
    CHECK(m.delta_125 == 1.0);
    CHECK(m.comp == 1.0);
}

TEST_CASE("depth_metrics: uniform ratio") {
    DepthMap gt(5, 5);
    DepthMap pred(5, 5);
    for (std::size_t i = 0; i < 25; ++i) {
        gt.values()[i] = 1.0 + 0.1 * static_cast<double>(i);
        pred.values()[i] = 1.1 * gt.values()[i];
    }
    const DepthMetrics m = depth_metrics(pred, gt, kRange);
    CHECK(m.abs_rel == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(m.delta_105 == 0.0);
    CHECK(m.delta_125 == 1.0);
}

TEST_CASE("depth_metrics: half invalid prediction") {
    DepthMap gt(4, 4, 2.0);
    DepthMap pred(4, 4, 0.0);
    for (std::size_t i = 0; i < 16; i += 2) {
        pred.values()[i] = 2.2;
    }
    const DepthMetrics m = depth_metrics(pred, gt, kRange);
    CHECK(m.abs_diff == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(m.comp == 0.5);
    CHECK(m.abs_rel == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(m.sq_rel == doctest::Approx(0.04 / 2.0).epsilon(1e-12));
}

TEST_CASE("depth_metrics: validity range and errors") {
    DepthMap gt(2, 1, 1.0);
    DepthMap pred(2, 1, std::vector<double>{1.0, 30.0});
    // Out-of-range predictions count as invalid.
    CHECK(depth_metrics(pred, gt, kRange).comp == 0.5);
    CHECK_THROWS_AS(depth_metrics(DepthMap(2, 1, 0.0), gt, kRange), NoValidPixels);
    CHECK_THROWS_AS(depth_metrics(DepthMap(3, 1, 1.0), gt, kRange), InputError);
    const std::vector<DepthMap> none;
    CHECK_THROWS_AS(depth_metrics(none, none, kRange), NoValidPixels);
}

TEST_CASE("depth_metrics: pooled frames and delta symmetry") {
    testutil::Rng rng(77);
    std::vector<DepthMap> preds;
    std::vector<DepthMap> gts;
    for (int f = 0; f < 4; ++f) {
        DepthMap p(16, 9);
        DepthMap g(16, 9);
        for (std::size_t i = 0; i < p.values().size(); ++i) {
            g.values()[i] = rng.uniform() < 0.1 ? 0.0 : rng.uniform(0.3, 8.0);
            p.values()[i] = rng.uniform() < 0.1 ? 0.0 : g.values()[i] * rng.uniform(0.7, 1.4);
        }
        const DepthMetrics a = depth_metrics(p, g, kRange);
        const DepthMetrics b = depth_metrics(g, p, kRange);
        CHECK(a.delta_105 == b.delta_105);
        CHECK(a.delta_125 == b.delta_125);
        preds.push_back(std::move(p));
        gts.push_back(std::move(g));
    }
    // Pooled metrics over the flattened pixels equal a single-map evaluation.
    std::vector<double> pv;
    std::vector<double> gv;
    for (std::size_t f = 0; f < preds.size(); ++f) {
        pv.insert(pv.end(), preds[f].values().begin(), preds[f].values().end());
        gv.insert(gv.end(), gts[f].values().begin(), gts[f].values().end());
    }
    const int n = static_cast<int>(pv.size());
    const DepthMetrics pooled = depth_metrics(preds, gts, kRange);
    const DepthMetrics flat = depth_metrics(DepthMap(n, 1, pv), DepthMap(n, 1, gv), kRange);
    CHECK(pooled.delta_105 == flat.delta_105);
    CHECK(pooled.comp == flat.comp);
    CHECK(pooled.abs_rel == doctest::Approx(flat.abs_rel).epsilon(1e-12));
    CHECK(pooled.sq_rel == doctest::Approx(flat.sq_rel).epsilon(1e-12));
}

TEST_CASE("log_transform: examples") {
    CHECK(log_transform(0.0) == 0.0);
    CHECK(std::abs(log_transform(kE1) - 1.0) <= 1e-9);
    CHECK(std::abs(log_transform(-kE1) + 1.0) <= 1e-9);
    CHECK(std::abs(log_transform(3.0) - std::log(4.0)) <= 1e-9);
}

TEST_CASE("log_transform: odd and strictly increasing") {
    testutil::Rng rng(2);
    for (int i = 0; i < 2000; ++i) {
        const double scale = std::pow(10.0, rng.uniform(-6.0, 6.0));
        const double x = rng.uniform(-1.0, 1.0) * scale;
        const double y = rng.uniform(-1.0, 1.0) * scale;
        CHECK(log_transform(-x) == -log_transform(x));
        if (x < y) {
            CHECK(log_transform(x) < log_transform(y));
        }
    }
}

TEST_CASE("sdf_loss: examples") {
    std::vector<SupervisionSample> exact;
    testutil::Rng rng(9);
    for (int i = 0; i < 20; ++i) {
        const double logit = rng.uniform(-2.0, 2.0);
        exact.push_back(sample(1.0, std::tanh(logit), 0.5, logit));
    }
    REQUIRE(sdf_loss(exact).has_value());
    CHECK(std::abs(*sdf_loss(exact)) <= 1e-9);

    const std::vector<SupervisionSample> single{sample(1.0, kE1, 0.5, 0.0)};
    CHECK(std::abs(*sdf_loss(single) - 1.0) <= 1e-9);

    const std::vector<SupervisionSample> unoccupied{sample(0.0, 0.3, 0.5, 1.0), sample(0.0, -0.2, 0.4, 0.0)};
    CHECK_FALSE(sdf_loss(unoccupied).has_value());
    CHECK_FALSE(sdf_loss(std::vector<SupervisionSample>{}).has_value());
}

TEST_CASE("occ_loss: examples") {
    const std::vector<SupervisionSample> half{sample(0.0, 0.0, 0.5, 0.0), sample(1.0, 0.0, 0.5, 0.0)};
    CHECK(std::abs(occ_loss(half) - std::log(2.0)) <= 1e-9);

    double previous = std::numeric_limits<double>::infinity();
    for (double eps : {1e-2, 1e-4, 1e-8, 1e-12}) {
        const std::vector<SupervisionSample> confident{sample(0.0, 0.0, eps, 0.0), sample(1.0, 0.0, 1.0 - eps, 0.0)};
        const double loss = occ_loss(confident);
        CHECK(loss < previous);
        CHECK(loss <= 1.01 * eps);
        previous = loss;
    }

    const std::vector<SupervisionSample> inv_e{sample(1.0, 0.0, 1.0 / std::numbers::e, 0.0)};
    CHECK(std::abs(occ_loss(inv_e) - 1.0) <= 1e-9);

    CHECK(occ_loss(std::vector<SupervisionSample>{}) == 0.0);
    CHECK_THROWS_AS(occ_loss(std::vector<SupervisionSample>{sample(1.0, 0.0, 1.0, 0.0)}), InputError);
    CHECK_THROWS_AS(occ_loss(std::vector<SupervisionSample>{sample(1.0, 0.0, 0.0, 0.0)}), InputError);
}

TEST_CASE("occ_loss: minimized at the empirical mean") {
    testutil::Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> occ(static_cast<std::size_t>(rng.integer(2, 40)));
        for (double& o : occ) {
            o = rng.uniform() < 0.5 ? 0.0 : 1.0;
        }
        occ[0] = 0.0;
        occ[1] = 1.0;
        const double mean = std::accumulate(occ.begin(), occ.end(), 0.0) / static_cast<double>(occ.size());
        const auto loss_at = [&](double p) {
            std::vector<SupervisionSample> s;
            for (double o : occ) {
                s.push_back(sample(o, 0.0, p, 0.0));
            }
            return occ_loss(s);
        };
        const double h = 1e-5;
        const double slope = (loss_at(mean + h) - loss_at(mean - h)) / (2.0 * h);
        CHECK(std::abs(slope) < 1e-6);
        CHECK(loss_at(mean) < loss_at(mean + 0.01));
        CHECK(loss_at(mean) < loss_at(mean - 0.01));
    }
}

TEST_CASE("total_loss: examples") {
    const std::vector<SupervisionSample> zero{sample(1.0, std::tanh(0.4), 1.0 - 1e-15, 0.4)};
    CHECK(std::abs(total_loss(zero)) <= 1e-9);

    const std::vector<SupervisionSample> no_sdf{sample(0.0, 0.0, 0.5, 0.0)};
    CHECK(std::abs(total_loss(no_sdf) - std::log(2.0)) <= 1e-9);

    // sdf term 1 (tanh(0) vs e-1) and occ term 1 (o = 1, p = 1/e).
    const std::vector<SupervisionSample> both{sample(1.0, kE1, 1.0 / std::numbers::e, 0.0)};
    CHECK(std::abs(total_loss(both) - 2.0) <= 1e-9);
}

TEST_CASE("format_report: keys and precision") {
    MeshMetrics m;
    m.acc = 1.23456;
    m.comp = 2.0;
    m.cham = 1.61728;
    m.prec = 0.5;
    m.recall = 0.25;
    m.f1 = 1.0 / 3.0;
    CHECK(format_report(m) == "acc_cm=1.2346\ncomp_cm=2.0000\ncham_cm=1.6173\nprec=0.5000\nrecall=0.2500\nf1=0.3333\n");
    DepthMetrics d;
    d.abs_rel = 0.1;
    d.delta_125 = 1.0;
    d.comp = 0.5;
    CHECK(format_report(d) ==
          "abs_rel=0.1000\nabs_diff_m=0.0000\nsq_rel=0.0000\ndelta_105=0.0000\ndelta_125=1.0000\ndepth_comp=0.5000\n");
}
