#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scalign/geometry.hpp"

namespace scalign {

class EmptyCloud : public InputError {
public:
    using InputError::InputError;
};

class NoValidPixels : public InputError {
public:
    using InputError::InputError;
};

// Exact nearest-neighbour queries over a fixed point set. Points are bucketed
// in a uniform grid and stored cell-contiguously, and each query scans cells
// in growing shells until no unscanned cell can hold a closer point.
class PointIndex {
public:
    explicit PointIndex(std::span<const Vec3> points);

    std::size_t size() const { return xs_.size(); }
    // Euclidean distance to the nearest indexed point; +inf when empty.
    double nearest_distance(const Vec3& q) const;

private:
    struct Cell {
        std::uint32_t begin = 0;
        std::uint32_t count = 0;
    };

    std::array<int, 3> cell_of(const Vec3& p) const;
    std::size_t cell_index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) + static_cast<std::size_t>(dims_[0]) *
                                                 (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_[1]) * z);
    }

    Vec3 lo_ = Vec3::Zero();
    double cell_ = 1.0;
    std::array<int, 3> dims_{1, 1, 1};
    std::vector<Cell> cells_;
    std::vector<double> xs_, ys_, zs_;
};

// Nearest distance from every query to the indexed set.
std::vector<double> nearest_distances(std::span<const Vec3> queries, const PointIndex& index);

struct MeshMetrics {
    double acc = 0.0;  // cm
    double comp = 0.0; // cm
    double cham = 0.0; // cm
    double prec = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double tau = 0.05; // m
};

// Point-to-point accuracy/completeness and threshold scores. A point counts
// toward precision/recall when its nearest distance is strictly below tau.
MeshMetrics mesh_metrics(std::span<const Vec3> pred, std::span<const Vec3> gt, double tau);

// Area-weighted uniform samples, ceil(area * density) of them (density in
// points per square meter), deterministic for a given seed.
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, double density_per_m2, std::uint64_t seed);

inline constexpr double kDefaultSampleDensity = 10000.0; // 1 point per cm^2

struct DepthMetrics {
    double abs_rel = 0.0;
    double abs_diff = 0.0; // m
    double sq_rel = 0.0;
    double delta_105 = 0.0;
    double delta_125 = 0.0;
    double comp = 0.0;
};

// Errors over pixels valid in both maps; comp is the fraction of gt-valid
// pixels with a valid prediction. Throws NoValidPixels when no pixel is valid
// in both.
DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt, const DepthValidityRange& range);

// Pooled over all pixels of all frame pairs.
DepthMetrics depth_metrics(std::span<const DepthMap> pred, std::span<const DepthMap> gt,
                           const DepthValidityRange& range);

// sign(x) * ln(|x| + 1)
double log_transform(double x);

struct SupervisionSample {
    Vec3 point = Vec3::Zero();
    double occupancy = 0.0;     // ground truth, 0 or 1
    double sdf_gt = 0.0;
    double occupancy_prob = 0.5; // predicted, strictly inside (0, 1)
    double sdf_logit = 0.0;
};

// Mean L1 between log-transformed tanh(logit) and gt sdf over samples with
// occupancy > 0.5; nullopt when there are none.
std::optional<double> sdf_loss(std::span<const SupervisionSample> samples);
// Mean binary cross-entropy; 0 for an empty set. Throws InputError when a
// predicted probability is outside (0, 1).
double occ_loss(std::span<const SupervisionSample> samples);
double total_loss(std::span<const SupervisionSample> samples);

// key=value lines with four decimals.
std::string format_report(const MeshMetrics& m);
std::string format_report(const DepthMetrics& m);

} // namespace scalign
