#include "scalign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "scalign/parallel.hpp"
#include "scalign/simd/kernels.hpp"

namespace scalign {

namespace {

constexpr std::size_t kMaxCells = std::size_t{1} << 22;

} // namespace

PointIndex::PointIndex(std::span<const Vec3> points) {
    if (points.empty()) {
        cells_.assign(1, Cell{});
        return;
    }
    if (points.size() >= std::numeric_limits<std::uint32_t>::max()) {
        throw InputError("point index: too many points");
    }
    Vec3 hi = points[0];
    lo_ = points[0];
    for (const Vec3& p : points) {
        if (!p.allFinite()) {
            throw InputError("point index: non-finite point");
        }
        lo_ = lo_.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec3 extent = hi - lo_;
    const double longest = std::max(extent.maxCoeff(), 1e-9);

    const auto dims_for = [&](double cell) {
        std::array<int, 3> d{};
        for (int a = 0; a < 3; ++a) {
            d[a] = static_cast<int>(std::floor(extent[a] / cell)) + 1;
        }
        return d;
    };
    const auto cell_count = [](const std::array<int, 3>& d) {
        return static_cast<double>(d[0]) * d[1] * d[2];
    };

    // Halve the cell size until occupied cells average at most eight points.
    const auto mean_occupancy = [&](double cell) {
        cell_ = cell;
        dims_ = dims_for(cell);
        std::vector<std::uint32_t> occupancy(static_cast<std::size_t>(cell_count(dims_)), 0);
        std::size_t used = 0;
        for (const Vec3& p : points) {
            const auto c = cell_of(p);
            used += occupancy[cell_index(c[0], c[1], c[2])]++ == 0 ? 1 : 0;
        }
        return static_cast<double>(points.size()) / static_cast<double>(used);
    };
    double cell = longest;
    for (int iter = 0; iter < 64 && mean_occupancy(cell) > 8.0; ++iter) {
        const double finer = 0.5 * cell;
        if (cell_count(dims_for(finer)) > static_cast<double>(kMaxCells) ||
            cell_count(dims_for(finer)) == cell_count(dims_)) {
            break;
        }
        cell = finer;
    }
    cell_ = cell;
    dims_ = dims_for(cell);

    cells_.assign(static_cast<std::size_t>(cell_count(dims_)), Cell{});
    std::vector<std::size_t> owner(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto c = cell_of(points[i]);
        owner[i] = cell_index(c[0], c[1], c[2]);
        ++cells_[owner[i]].count;
    }
    std::uint32_t offset = 0;
    for (Cell& c : cells_) {
        c.begin = offset;
        offset += c.count;
    }
    xs_.resize(points.size());
    ys_.resize(points.size());
    zs_.resize(points.size());
    std::vector<std::uint32_t> fill(cells_.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const std::size_t slot = cells_[owner[i]].begin + fill[owner[i]]++;
        xs_[slot] = points[i].x();
        ys_[slot] = points[i].y();
        zs_[slot] = points[i].z();
    }
}

std::array<int, 3> PointIndex::cell_of(const Vec3& p) const {
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a) {
        const double f = std::floor((p[a] - lo_[a]) / cell_);
        c[a] = static_cast<int>(std::clamp(f, 0.0, static_cast<double>(dims_[a] - 1)));
    }
    return c;
}

double PointIndex::nearest_distance(const Vec3& q) const {
    if (xs_.empty()) {
        return std::numeric_limits<double>::infinity();
    }
    const simd::Kernels& kernels = simd::active();
    const auto c = cell_of(q);
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0;; ++r) {
        std::array<int, 3> lo{}, hi{};
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::max(0, c[a] - r);
            hi[a] = std::min(dims_[a] - 1, c[a] + r);
        }
        const auto scan = [&](int x, int y, int z) {
            const Cell& cell = cells_[cell_index(x, y, z)];
            if (cell.count == 0) {
                return;
            }
            const double d = kernels.min_sq_distance(xs_.data() + cell.begin, ys_.data() + cell.begin,
                                                     zs_.data() + cell.begin, cell.count, q.x(), q.y(), q.z(),
                                                     nullptr);
            best = std::min(best, d);
        };
        // Only the cells at Chebyshev distance r from c.
        for (int z = lo[2]; z <= hi[2]; ++z) {
            for (int y = lo[1]; y <= hi[1]; ++y) {
                if (std::abs(z - c[2]) == r || std::abs(y - c[1]) == r) {
                    for (int x = lo[0]; x <= hi[0]; ++x) {
                        scan(x, y, z);
                    }
                    continue;
                }
                if (c[0] - r >= 0) {
                    scan(c[0] - r, y, z);
                }
                if (r > 0 && c[0] + r < dims_[0]) {
                    scan(c[0] + r, y, z);
                }
            }
        }
        // Anything not yet scanned lies beyond one of the faces of the scanned
        // box that are still interior to the grid.
        double bound = std::numeric_limits<double>::infinity();
        bool complete = true;
        for (int a = 0; a < 3; ++a) {
            if (c[a] - r > 0) {
                complete = false;
                const double face = lo_[a] + (c[a] - r) * cell_;
                bound = std::min(bound, std::max(0.0, q[a] - face));
            }
            if (c[a] + r < dims_[a] - 1) {
                complete = false;
                const double face = lo_[a] + (c[a] + r + 1) * cell_;
                bound = std::min(bound, std::max(0.0, face - q[a]));
            }
        }
        if (complete || best <= bound * bound) {
            break;
        }
    }
    return std::sqrt(best);
}

std::vector<double> nearest_distances(std::span<const Vec3> queries, const PointIndex& index) {
    std::vector<double> out(queries.size());
    parallel_for(0, queries.size(), [&](std::size_t i) { out[i] = index.nearest_distance(queries[i]); });
    return out;
}

MeshMetrics mesh_metrics(std::span<const Vec3> pred, std::span<const Vec3> gt, double tau) {
    if (pred.empty() || gt.empty()) {
        throw EmptyCloud("mesh_metrics: empty point set");
    }
    if (!(tau > 0.0)) {
        throw InputError("mesh_metrics: tau must be positive");
    }
    const PointIndex gt_index(gt);
    const PointIndex pred_index(pred);
    const std::vector<double> to_gt = nearest_distances(pred, gt_index);
    const std::vector<double> to_pred = nearest_distances(gt, pred_index);

    const auto summarize = [tau](const std::vector<double>& d, double& mean_cm, double& within) {
        double sum = 0.0;
        std::size_t hits = 0;
        for (double v : d) {
            sum += v;
            hits += v < tau ? 1 : 0;
        }
        mean_cm = 100.0 * sum / static_cast<double>(d.size());
        within = static_cast<double>(hits) / static_cast<double>(d.size());
    };

    MeshMetrics m;
    m.tau = tau;
    summarize(to_gt, m.acc, m.prec);
    summarize(to_pred, m.comp, m.recall);
    m.cham = 0.5 * (m.acc + m.comp);
    m.f1 = (m.prec + m.recall) > 0.0 ? 2.0 * m.prec * m.recall / (m.prec + m.recall) : 0.0;
    return m;
}

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, double density_per_m2, std::uint64_t seed) {
    if (!(density_per_m2 > 0.0)) {
        throw InputError("sample_surface: density must be positive");
    }
    std::vector<double> cdf;
    cdf.reserve(mesh.faces.size());
    double total = 0.0;
    for (const Face& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        total += 0.5 * (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).norm();
        cdf.push_back(total);
    }
    if (!(total > 0.0)) {
        return {};
    }
    const auto count = static_cast<std::size_t>(std::ceil(total * density_per_m2));
    std::mt19937_64 rng(seed);
    // 53-bit mantissa draw; portable unlike uniform_real_distribution.
    const auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    std::vector<Vec3> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double pick = uniform() * total;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), pick);
        if (it == cdf.end()) {
            --it;
        }
        const Face& f = mesh.faces[static_cast<std::size_t>(it - cdf.begin())];
        const double r1 = std::sqrt(uniform());
        const double r2 = uniform();
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        out.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
    }
    return out;
}

namespace {

DepthMetrics finish(const simd::DepthErrorSums& s) {
    if (s.both_valid == 0) {
        throw NoValidPixels("depth_metrics: no pixel is valid in both prediction and ground truth");
    }
    const double n = static_cast<double>(s.both_valid);
    DepthMetrics m;
    m.abs_rel = s.abs_rel / n;
    m.abs_diff = s.abs_diff / n;
    m.sq_rel = s.sq_rel / n;
    m.delta_105 = static_cast<double>(s.delta_105) / n;
    m.delta_125 = static_cast<double>(s.delta_125) / n;
    m.comp = n / static_cast<double>(s.gt_valid);
    return m;
}

} // namespace

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt, const DepthValidityRange& range) {
    return depth_metrics(std::span<const DepthMap>(&pred, 1), std::span<const DepthMap>(&gt, 1), range);
}

DepthMetrics depth_metrics(std::span<const DepthMap> pred, std::span<const DepthMap> gt,
                           const DepthValidityRange& range) {
    if (pred.size() != gt.size()) {
        throw InputError("depth_metrics: frame count mismatch");
    }
    const simd::Kernels& kernels = simd::active();
    simd::DepthErrorSums sums;
    for (std::size_t f = 0; f < pred.size(); ++f) {
        if (pred[f].width() != gt[f].width() || pred[f].height() != gt[f].height()) {
            throw InputError("depth_metrics: depth maps differ in size");
        }
        kernels.depth_error_sums(pred[f].values().data(), gt[f].values().data(), gt[f].size(), range.epsilon,
                                 range.d_max, &sums);
    }
    return finish(sums);
}

double log_transform(double x) {
    const double t = std::log1p(std::abs(x));
    return x < 0.0 ? -t : t;
}

std::optional<double> sdf_loss(std::span<const SupervisionSample> samples) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const SupervisionSample& s : samples) {
        if (!(s.occupancy > 0.5)) {
            continue;
        }
        sum += std::abs(log_transform(std::tanh(s.sdf_logit)) - log_transform(s.sdf_gt));
        ++n;
    }
    if (n == 0) {
        return std::nullopt;
    }
    return sum / static_cast<double>(n);
}

double occ_loss(std::span<const SupervisionSample> samples) {
    if (samples.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const SupervisionSample& s : samples) {
        const double p = s.occupancy_prob;
        if (!(p > 0.0 && p < 1.0)) {
            throw InputError("occ_loss: predicted occupancy must lie strictly inside (0, 1)");
        }
        sum -= s.occupancy * std::log(p) + (1.0 - s.occupancy) * std::log1p(-p);
    }
    return sum / static_cast<double>(samples.size());
}

double total_loss(std::span<const SupervisionSample> samples) {
    return sdf_loss(samples).value_or(0.0) + occ_loss(samples);
}

namespace {

void append(std::string& out, const char* key, double value) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s=%.4f\n", key, value);
    out += buf;
}

} // namespace

std::string format_report(const MeshMetrics& m) {
    std::string out;
    append(out, "acc_cm", m.acc);
    append(out, "comp_cm", m.comp);
    append(out, "cham_cm", m.cham);
    append(out, "prec", m.prec);
    append(out, "recall", m.recall);
    append(out, "f1", m.f1);
    return out;
}

std::string format_report(const DepthMetrics& m) {
    std::string out;
    append(out, "abs_rel", m.abs_rel);
    append(out, "abs_diff_m", m.abs_diff);
    append(out, "sq_rel", m.sq_rel);
    append(out, "delta_105", m.delta_105);
    append(out, "delta_125", m.delta_125);
    append(out, "depth_comp", m.comp);
    return out;
}

} // namespace scalign
