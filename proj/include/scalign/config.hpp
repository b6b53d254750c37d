#pragma once

#include <optional>
#include <string>

#include "scalign/geometry.hpp"
#include "scalign/keyframes.hpp"

namespace scalign {

enum class DatasetProfile { Generic, ScanNet };

const char* to_string(DatasetProfile profile);
// Accepts "generic" and "scannet"; throws InputError otherwise.
DatasetProfile parse_profile(const std::string& name);

struct PipelineConfig {
    int n = 8;
    int o = 4;
    double voxel_size = 0.04;
    double truncation = 0.12;
    double epsilon = 0.05;
    double d_max = 20.0;
    double lambda = 0.1;
    double max_reproj = 2.0;
    double tau = 0.05;
    double t_max = 0.1;
    double r_max = 15.0;
    DatasetProfile dataset_profile = DatasetProfile::Generic;

    // Defaults for a profile: n = 16 on ScanNet, 8 elsewhere.
    static PipelineConfig defaults(DatasetProfile profile);

    SubmapConfig submap() const { return {n, o}; }
    DepthValidityRange depth_range() const { return {epsilon, d_max}; }
    void validate() const;

    bool operator==(const PipelineConfig&) const = default;
};

// `key = value` lines; '#' starts a comment. Keys not given take the
// defaults of the effective profile, which is `profile_override` when set,
// else the file's dataset_profile, else generic. An absent truncation is
// 3 * voxel_size. Unknown or repeated keys throw InputError.
PipelineConfig parse_config(const std::string& text, std::optional<DatasetProfile> profile_override = std::nullopt);
PipelineConfig load_config(const std::string& path, std::optional<DatasetProfile> profile_override = std::nullopt);

// Every key, with doubles in shortest round-trip form.
std::string serialize_config(const PipelineConfig& cfg);

} // namespace scalign
