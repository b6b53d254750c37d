#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "scalign/geometry.hpp"
#include "scalign/keyframes.hpp"

namespace scalign {

class DimensionMismatch : public InputError {
public:
    using InputError::InputError;
};

// The normal matrix could not be factored. Unreachable for a validated
// problem with lambda > 0.
class SingularSystem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Ratios d_i(u) / d_j(u) over pixels where both depths lie in range.
std::vector<double> overlap_ratios(const DepthMap& d_i, const DepthMap& d_j, const DepthValidityRange& range);

struct EdgeWeighting {
    // Pixel support that earns full weight.
    double n_ref = 1.0;
    double w_min = 1e-3;

    // n_ref = 0.1 * overlap_frames * pixels_per_frame.
    static EdgeWeighting for_overlap(std::size_t overlap_frames, std::size_t pixels_per_frame);
};

struct RelativeScale {
    double r = 1.0;
    double weight = 0.0;
    std::size_t valid_count = 0;
};

// Median of the pooled ratio sets. An empty pool gives r = 1 at minimum weight.
RelativeScale edge_relative_scale(std::span<const std::vector<double>> ratio_sets, const EdgeWeighting& weighting);

struct ScaleEdge {
    std::size_t i = 0;
    std::size_t j = 0;
    double rho = 0.0; // target for x_i - x_j, i.e. ln(s_i / s_j)
    double weight = 1.0;
    std::size_t valid_pixel_count = 0;
};

struct ScaleGraphProblem {
    std::size_t node_count = 0;
    std::vector<double> priors; // ln s_i^(0)
    std::vector<ScaleEdge> edges;
    double lambda = 0.1;

    void validate() const;

    // sum_e w (x_i - x_j - rho)^2 + lambda * sum_i (x_i - prior_i)^2
    double objective(std::span<const double> x) const;
    std::vector<double> gradient(std::span<const double> x) const;
};

struct SolverOptions {
    int max_iters = 100;
    // On the gradient max-norm. The smallest Hessian eigenvalue is at least
    // 2 * lambda, so the coordinate error is below tol / (2 * lambda).
    double tol = 1e-12;
};

struct ScaleSolution {
    std::vector<double> log_scales;
    std::vector<double> scales;
    double initial_cost = 0.0;
    double final_cost = 0.0;
    int iterations = 0;
    // Objective after initialization and after every accepted step.
    std::vector<double> cost_history;
};

// Levenberg-Marquardt from x_i = median_j(prior_j). Throws InputError for an
// invalid problem and SingularSystem if the damped system cannot be factored.
ScaleSolution solve_scales(const ScaleGraphProblem& problem, const SolverOptions& options = {});

// Aligned depth per keyframe position: scales[m] * prediction of the first
// submap containing that position. submap_depths[m][p - submaps[m].start].
std::vector<DepthMap> apply_scales(std::span<const Submap> submaps,
                                   std::span<const std::vector<DepthMap>> submap_depths,
                                   std::span<const double> scales);

} // namespace scalign
