#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scalign/geometry.hpp"

namespace scalign {

struct Keyframe {
    std::size_t frame_id = 0;
    Pose pose;
};

// Ordered keyframes; frame ids strictly increase.
struct KeyframeSequence {
    std::vector<Keyframe> entries;

    std::size_t size() const { return entries.size(); }
};

struct SubmapConfig {
    int n = 8;
    int o = 4;

    void validate() const;
};

// Inclusive range of 0-based positions into a KeyframeSequence.
struct Submap {
    std::size_t index = 0;
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - start + 1; }
    bool contains(std::size_t position) const { return position >= start && position <= end; }
    bool operator==(const Submap&) const = default;
};

// Keeps frame 0 and every frame whose translation from the last kept frame
// exceeds t_max (meters) or whose rotation exceeds r_max_deg (degrees).
// r_max_deg may be +inf to disable the rotation test.
KeyframeSequence select_keyframes(std::span<const Pose> poses, double t_max, double r_max_deg);

// Windows of n keyframes advancing by n - o. A trailing window that adds no
// position beyond its predecessor is dropped.
std::vector<Submap> partition_submaps(std::size_t keyframe_count, const SubmapConfig& cfg);

// Positions shared by two submaps, in increasing order.
std::vector<std::size_t> shared_positions(const Submap& a, const Submap& b);

} // namespace scalign
