#include "scalign/keyframes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace scalign {

void SubmapConfig::validate() const {
    if (n < 2) {
        throw InputError("submap config: n must be at least 2");
    }
    if (o < 0 || o >= n) {
        throw InputError("submap config: overlap must satisfy 0 <= o < n");
    }
}

KeyframeSequence select_keyframes(std::span<const Pose> poses, double t_max, double r_max_deg) {
    if (poses.empty()) {
        throw InputError("select_keyframes: empty pose list");
    }
    if (!(t_max > 0.0) || !(r_max_deg > 0.0)) {
        throw InputError("select_keyframes: thresholds must be positive");
    }
    const double r_max = r_max_deg * std::numbers::pi / 180.0;

    KeyframeSequence seq;
    seq.entries.push_back({0, poses[0]});
    for (std::size_t i = 1; i < poses.size(); ++i) {
        const Pose& last = seq.entries.back().pose;
        if (translation_distance(last, poses[i]) > t_max || rotation_angle(last, poses[i]) > r_max) {
            seq.entries.push_back({i, poses[i]});
        }
    }
    return seq;
}

std::vector<Submap> partition_submaps(std::size_t keyframe_count, const SubmapConfig& cfg) {
    cfg.validate();
    if (keyframe_count == 0) {
        throw InputError("partition_submaps: no keyframes");
    }
    const auto stride = static_cast<std::size_t>(cfg.n - cfg.o);
    const auto window = static_cast<std::size_t>(cfg.n);

    std::vector<Submap> out;
    for (std::size_t start = 0; start < keyframe_count; start += stride) {
        const std::size_t end = std::min(start + window, keyframe_count) - 1;
        if (!out.empty() && end <= out.back().end) {
            break;
        }
        out.push_back({out.size(), start, end});
    }
    return out;
}

std::vector<std::size_t> shared_positions(const Submap& a, const Submap& b) {
    std::vector<std::size_t> out;
    const std::size_t lo = std::max(a.start, b.start);
    const std::size_t hi = std::min(a.end, b.end);
    for (std::size_t p = lo; p <= hi && lo <= hi; ++p) {
        out.push_back(p);
    }
    return out;
}

} // namespace scalign
