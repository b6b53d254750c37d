#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

namespace scalign {

// Lower median: for an even count the smaller of the two middle order
// statistics. Takes the values by copy since nth_element reorders them.
inline std::optional<double> lower_median(std::vector<double> values) {
    if (values.empty()) {
        return std::nullopt;
    }
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

} // namespace scalign
