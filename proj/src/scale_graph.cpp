#include "scalign/scale_graph.hpp"

#include <algorithm>
#include <cmath>

#include "scalign/median.hpp"
#include "scalign/simd/kernels.hpp"

namespace scalign {

std::vector<double> overlap_ratios(const DepthMap& d_i, const DepthMap& d_j, const DepthValidityRange& range) {
    if (d_i.width() != d_j.width() || d_i.height() != d_j.height()) {
        throw DimensionMismatch("overlap_ratios: depth maps differ in size");
    }
    const auto a = d_i.values();
    const auto b = d_j.values();
    std::vector<double> out;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (range.contains(a[k]) && range.contains(b[k])) {
            out.push_back(a[k] / b[k]);
        }
    }
    return out;
}

EdgeWeighting EdgeWeighting::for_overlap(std::size_t overlap_frames, std::size_t pixels_per_frame) {
    EdgeWeighting w;
    w.n_ref = std::max(1.0, 0.1 * static_cast<double>(overlap_frames) * static_cast<double>(pixels_per_frame));
    return w;
}

RelativeScale edge_relative_scale(std::span<const std::vector<double>> ratio_sets, const EdgeWeighting& weighting) {
    std::vector<double> pooled;
    for (const auto& set : ratio_sets) {
        pooled.insert(pooled.end(), set.begin(), set.end());
    }
    RelativeScale out;
    out.valid_count = pooled.size();
    if (pooled.empty()) {
        out.r = 1.0;
        out.weight = weighting.w_min;
        return out;
    }
    out.r = *lower_median(std::move(pooled));
    out.weight = std::clamp(static_cast<double>(out.valid_count) / weighting.n_ref, weighting.w_min, 1.0);
    return out;
}

void ScaleGraphProblem::validate() const {
    if (node_count == 0) {
        throw InputError("scale graph: no nodes");
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InputError("scale graph: lambda must be positive");
    }
    if (priors.size() != node_count) {
        throw InputError("scale graph: one prior per node required");
    }
    for (double p : priors) {
        if (!std::isfinite(p)) {
            throw InputError("scale graph: non-finite prior");
        }
    }
    for (const ScaleEdge& e : edges) {
        if (!(e.i < e.j) || e.j >= node_count) {
            throw InputError("scale graph: edge endpoints must satisfy i < j < node_count");
        }
        if (!std::isfinite(e.rho) || !(e.weight >= 0.0) || !std::isfinite(e.weight)) {
            throw InputError("scale graph: invalid edge value");
        }
    }
}

double ScaleGraphProblem::objective(std::span<const double> x) const {
    double cost = 0.0;
    for (const ScaleEdge& e : edges) {
        const double r = x[e.i] - x[e.j] - e.rho;
        cost += e.weight * r * r;
    }
    double prior_cost = 0.0;
    for (std::size_t i = 0; i < node_count; ++i) {
        const double r = x[i] - priors[i];
        prior_cost += r * r;
    }
    return cost + lambda * prior_cost;
}

std::vector<double> ScaleGraphProblem::gradient(std::span<const double> x) const {
    std::vector<double> g(node_count, 0.0);
    for (const ScaleEdge& e : edges) {
        const double r = 2.0 * e.weight * (x[e.i] - x[e.j] - e.rho);
        g[e.i] += r;
        g[e.j] -= r;
    }
    for (std::size_t i = 0; i < node_count; ++i) {
        g[i] += 2.0 * lambda * (x[i] - priors[i]);
    }
    return g;
}

namespace {

// Dense symmetric system H d = b solved by Cholesky; H is M x M with M the
// submap count.
class NormalSystem {
public:
    explicit NormalSystem(std::size_t n) : n_(n), h_(n * n, 0.0), b_(n, 0.0) {}

    double& h(std::size_t r, std::size_t c) { return h_[r * n_ + c]; }
    double h(std::size_t r, std::size_t c) const { return h_[r * n_ + c]; }
    double& b(std::size_t r) { return b_[r]; }

    double max_diagonal() const {
        double m = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            m = std::max(m, h(i, i));
        }
        return m;
    }

    // Solves (H + mu I) d = b. Returns false when the matrix is not positive
    // definite.
    bool solve_damped(double mu, std::vector<double>& d) const {
        std::vector<double> l(n_ * n_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            double diag = h(j, j) + mu;
            for (std::size_t k = 0; k < j; ++k) {
                diag -= l[j * n_ + k] * l[j * n_ + k];
            }
            if (!(diag > 0.0)) {
                return false;
            }
            const double ljj = std::sqrt(diag);
            l[j * n_ + j] = ljj;
            for (std::size_t i = j + 1; i < n_; ++i) {
                double v = h(i, j);
                for (std::size_t k = 0; k < j; ++k) {
                    v -= l[i * n_ + k] * l[j * n_ + k];
                }
                l[i * n_ + j] = v / ljj;
            }
        }
        d.assign(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double v = b_[i];
            for (std::size_t k = 0; k < i; ++k) {
                v -= l[i * n_ + k] * d[k];
            }
            d[i] = v / l[i * n_ + i];
        }
        for (std::size_t i = n_; i-- > 0;) {
            double v = d[i];
            for (std::size_t k = i + 1; k < n_; ++k) {
                v -= l[k * n_ + i] * d[k];
            }
            d[i] = v / l[i * n_ + i];
        }
        return true;
    }

private:
    std::size_t n_;
    std::vector<double> h_;
    std::vector<double> b_;
};

// Gauss-Newton system J^T J d = -J^T r for the stacked residuals
// sqrt(w)(x_i - x_j - rho) and sqrt(lambda)(x_i - prior_i).
NormalSystem linearize(const ScaleGraphProblem& p, std::span<const double> x) {
    NormalSystem sys(p.node_count);
    for (const ScaleEdge& e : p.edges) {
        const double r = x[e.i] - x[e.j] - e.rho;
        sys.h(e.i, e.i) += e.weight;
        sys.h(e.j, e.j) += e.weight;
        sys.h(e.i, e.j) -= e.weight;
        sys.h(e.j, e.i) -= e.weight;
        sys.b(e.i) -= e.weight * r;
        sys.b(e.j) += e.weight * r;
    }
    for (std::size_t i = 0; i < p.node_count; ++i) {
        sys.h(i, i) += p.lambda;
        sys.b(i) -= p.lambda * (x[i] - p.priors[i]);
    }
    return sys;
}

// objective(x + step) - objective(x), expanded per residual as
// d * (2 r + d) so small changes near the optimum do not cancel away.
double cost_change(const ScaleGraphProblem& p, std::span<const double> x, std::span<const double> step) {
    double edge = 0.0;
    for (const ScaleEdge& e : p.edges) {
        const double r = x[e.i] - x[e.j] - e.rho;
        const double d = step[e.i] - step[e.j];
        edge += e.weight * d * (2.0 * r + d);
    }
    double prior = 0.0;
    for (std::size_t i = 0; i < p.node_count; ++i) {
        prior += step[i] * (2.0 * (x[i] - p.priors[i]) + step[i]);
    }
    return edge + p.lambda * prior;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double e : v) {
        m = std::max(m, std::abs(e));
    }
    return m;
}

} // namespace

ScaleSolution solve_scales(const ScaleGraphProblem& problem, const SolverOptions& options) {
    problem.validate();

    ScaleSolution sol;
    const double init = *lower_median(problem.priors);
    std::vector<double> x(problem.node_count, init);
    double cost = problem.objective(x);
    sol.initial_cost = cost;
    sol.cost_history.push_back(cost);

    double mu = -1.0;
    std::vector<double> step;
    std::vector<double> candidate(problem.node_count);
    int iter = 0;
    while (iter < options.max_iters && max_abs(problem.gradient(x)) >= options.tol) {
        ++iter;
        const NormalSystem sys = linearize(problem, x);
        if (mu < 0.0) {
            mu = 1e-4 * sys.max_diagonal();
        }
        bool accepted = false;
        // Damping grows tenfold per rejection; a quadratic objective accepts
        // once mu is small relative to the curvature.
        for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
            if (!sys.solve_damped(mu, step)) {
                throw SingularSystem("solve_scales: normal matrix is not positive definite");
            }
            for (std::size_t i = 0; i < x.size(); ++i) {
                candidate[i] = x[i] + step[i];
            }
            if (cost_change(problem, x, step) < 0.0) {
                x.swap(candidate);
                cost = problem.objective(x);
                sol.cost_history.push_back(cost);
                mu /= 3.0;
                accepted = true;
            } else {
                mu *= 10.0;
            }
        }
        if (!accepted) {
            // No descent available at working precision.
            break;
        }
    }

    sol.iterations = iter;
    sol.final_cost = cost;
    sol.log_scales = x;
    sol.scales.reserve(x.size());
    for (double xi : x) {
        sol.scales.push_back(std::exp(xi));
    }
    return sol;
}

std::vector<DepthMap> apply_scales(std::span<const Submap> submaps,
                                   std::span<const std::vector<DepthMap>> submap_depths,
                                   std::span<const double> scales) {
    if (submap_depths.size() != submaps.size() || scales.size() < submaps.size()) {
        throw InputError("apply_scales: solution does not cover every submap");
    }
    std::size_t positions = 0;
    for (const Submap& s : submaps) {
        positions = std::max(positions, s.end + 1);
    }
    const simd::Kernels& kernels = simd::active();
    std::vector<DepthMap> aligned(positions);
    std::vector<bool> filled(positions, false);
    for (std::size_t m = 0; m < submaps.size(); ++m) {
        const Submap& s = submaps[m];
        if (submap_depths[m].size() != s.length()) {
            throw InputError("apply_scales: submap depth count does not match its window");
        }
        for (std::size_t p = s.start; p <= s.end; ++p) {
            if (filled[p]) {
                continue;
            }
            const DepthMap& src = submap_depths[m][p - s.start];
            DepthMap out(src.width(), src.height());
            kernels.scale_valid(src.values().data(), out.values().data(), src.size(), scales[m]);
            aligned[p] = std::move(out);
            filled[p] = true;
        }
    }
    return aligned;
}

} // namespace scalign
