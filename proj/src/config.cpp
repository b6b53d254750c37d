#include "scalign/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace scalign {

const char* to_string(DatasetProfile profile) {
    return profile == DatasetProfile::ScanNet ? "scannet" : "generic";
}

DatasetProfile parse_profile(const std::string& name) {
    if (name == "scannet") {
        return DatasetProfile::ScanNet;
    }
    if (name == "generic") {
        return DatasetProfile::Generic;
    }
    throw InputError("unknown dataset profile '" + name + "' (expected scannet or generic)");
}

PipelineConfig PipelineConfig::defaults(DatasetProfile profile) {
    PipelineConfig cfg;
    cfg.dataset_profile = profile;
    cfg.n = profile == DatasetProfile::ScanNet ? 16 : 8;
    return cfg;
}

void PipelineConfig::validate() const {
    submap().validate();
    depth_range().validate();
    const auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || std::isnan(v)) {
            throw InputError(std::string("config: ") + name + " must be positive");
        }
    };
    positive(voxel_size, "voxel_size");
    positive(truncation, "truncation");
    positive(lambda, "lambda");
    positive(max_reproj, "max_reproj");
    positive(tau, "tau");
    positive(t_max, "t_max");
    positive(r_max, "r_max");
    if (!std::isfinite(voxel_size) || !std::isfinite(truncation) || !std::isfinite(lambda) || !std::isfinite(tau)) {
        throw InputError("config: voxel_size, truncation, lambda and tau must be finite");
    }
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

double to_double(const std::string& key, const std::string& value) {
    if (value == "inf" || value == "+inf") {
        return std::numeric_limits<double>::infinity();
    }
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw InputError("config: " + key + " expects a number, got '" + value + "'");
    }
    return out;
}

int to_int(const std::string& key, const std::string& value) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw InputError("config: " + key + " expects an integer, got '" + value + "'");
    }
    return out;
}

std::string shortest(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

} // namespace

PipelineConfig parse_config(const std::string& text, std::optional<DatasetProfile> profile_override) {
    std::map<std::string, std::string> entries;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InputError("config line " + std::to_string(line_no) + ": expected `key = value`");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        if (!entries.emplace(key, value).second) {
            throw InputError("config line " + std::to_string(line_no) + ": repeated key " + key);
        }
    }

    DatasetProfile profile = DatasetProfile::Generic;
    if (const auto it = entries.find("dataset_profile"); it != entries.end()) {
        profile = parse_profile(it->second);
    }
    if (profile_override) {
        profile = *profile_override;
    }
    PipelineConfig cfg = PipelineConfig::defaults(profile);
    bool truncation_given = false;
    for (const auto& [key, value] : entries) {
        if (key == "dataset_profile") {
            continue;
        } else if (key == "n") {
            cfg.n = to_int(key, value);
        } else if (key == "o") {
            cfg.o = to_int(key, value);
        } else if (key == "voxel_size") {
            cfg.voxel_size = to_double(key, value);
        } else if (key == "truncation") {
            cfg.truncation = to_double(key, value);
            truncation_given = true;
        } else if (key == "epsilon") {
            cfg.epsilon = to_double(key, value);
        } else if (key == "d_max") {
            cfg.d_max = to_double(key, value);
        } else if (key == "lambda") {
            cfg.lambda = to_double(key, value);
        } else if (key == "max_reproj") {
            cfg.max_reproj = to_double(key, value);
        } else if (key == "tau") {
            cfg.tau = to_double(key, value);
        } else if (key == "t_max") {
            cfg.t_max = to_double(key, value);
        } else if (key == "r_max") {
            cfg.r_max = to_double(key, value);
        } else {
            throw InputError("config: unknown key '" + key + "'");
        }
    }
    if (!truncation_given) {
        cfg.truncation = 3.0 * cfg.voxel_size;
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::string& path, std::optional<DatasetProfile> profile_override) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open config " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), profile_override);
}

std::string serialize_config(const PipelineConfig& cfg) {
    std::string out;
    const auto put = [&](const char* key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    put("dataset_profile", std::string("\"") + to_string(cfg.dataset_profile) + "\"");
    put("n", std::to_string(cfg.n));
    put("o", std::to_string(cfg.o));
    put("voxel_size", shortest(cfg.voxel_size));
    put("truncation", shortest(cfg.truncation));
    put("epsilon", shortest(cfg.epsilon));
    put("d_max", shortest(cfg.d_max));
    put("lambda", shortest(cfg.lambda));
    put("max_reproj", shortest(cfg.max_reproj));
    put("tau", shortest(cfg.tau));
    put("t_max", shortest(cfg.t_max));
    put("r_max", shortest(cfg.r_max));
    return out;
}

} // namespace scalign
