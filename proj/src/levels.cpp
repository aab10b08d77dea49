#include "levels.hpp"

#include <cstdio>

#include "didldv/errors.hpp"

namespace didldv::detail {

LevelTable tabulate_levels(const PanelDataset& ds) {
    LevelTable table;
    for (const auto& u : ds.units) {
        auto& cell = table[u.y_pre];
        if (u.group == 1) {
            ++cell.n_treated;
        } else {
            ++cell.n_control;
            cell.control_post_sum += u.y_post;
        }
    }
    return table;
}

std::vector<double> unsupported_levels(const LevelTable& levels) {
    std::vector<double> out;
    for (const auto& [y, cell] : levels) {
        if (cell.n_treated > 0 && cell.n_control == 0) out.push_back(y);
    }
    return out;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string format_levels(const std::vector<double>& levels) {
    std::string out;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (i) out += ", ";
        out += format_number(levels[i]);
    }
    return out;
}

void require_groups(const PanelDataset& ds, const char* who) {
    bool treated = false;
    bool control = false;
    for (const auto& u : ds.units) {
        (u.group == 1 ? treated : control) = true;
        if (treated && control) return;
    }
    if (!control) throw EstimationError(std::string(who) + ": control group empty");
    throw EstimationError(std::string(who) + ": treated group empty");
}

}  // namespace didldv::detail
