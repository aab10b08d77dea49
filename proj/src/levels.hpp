#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "didldv/data.hpp"

namespace didldv::detail {

/// Per-y_pre-level tallies of a discrete panel.
struct LevelCell {
    std::size_t n_treated = 0;
    std::size_t n_control = 0;
    double control_post_sum = 0.0;

    [[nodiscard]] double control_mean() const { return control_post_sum / static_cast<double>(n_control); }
};

using LevelTable = std::map<double, LevelCell>;

[[nodiscard]] LevelTable tabulate_levels(const PanelDataset& ds);

/// Treated-supported levels with no control units.
[[nodiscard]] std::vector<double> unsupported_levels(const LevelTable& levels);

/// "0, 2, 7"
[[nodiscard]] std::string format_levels(const std::vector<double>& levels);

[[nodiscard]] std::string format_number(double v);

void require_groups(const PanelDataset& ds, const char* who);

}  // namespace didldv::detail
