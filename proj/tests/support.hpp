#pragma once

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "didldv/data.hpp"

namespace testing {

using didldv::OutcomeKind;
using didldv::PanelDataset;
using didldv::PanelUnit;

inline std::string data_path(const std::string& name) { return std::string(DIDLDV_TEST_DATA_DIR) + "/" + name; }

inline PanelDataset load_file(const std::string& name, didldv::Layout layout, OutcomeKind kind,
                              std::optional<int> top_code = std::nullopt) {
    std::ifstream in(data_path(name));
    if (!in) throw std::runtime_error("missing fixture " + name);
    return didldv::load_panel(in, layout, kind, top_code);
}

inline PanelDataset crash_counts() {
    return load_file("crash_counts.csv", didldv::Layout::contingency, OutcomeKind::count, 3);
}

inline PanelDataset crash_binary() {
    return load_file("crash_binary.csv", didldv::Layout::contingency, OutcomeKind::binary);
}

// control {(0,0),(1,1),(2,3)}, treated {(1,2),(3,5)}
inline PanelDataset tiny() {
    PanelDataset ds;
    ds.outcome_kind = OutcomeKind::count;
    ds.units = {{"c1", 0, 0, 0, {}}, {"c2", 0, 1, 1, {}}, {"c3", 0, 2, 3, {}}, {"t1", 1, 1, 2, {}}, {"t2", 1, 3, 5, {}}};
    return ds;
}

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// Random discrete panel on levels 0..max_level. With `overlap`, every
// treated y_pre level is also present among controls.
inline PanelDataset random_discrete(std::mt19937_64& rng, int max_n, int max_level, bool overlap) {
    std::uniform_int_distribution<int> n_dist(4, max_n);
    std::uniform_int_distribution<int> level(0, max_level);
    std::bernoulli_distribution coin(0.4);
    PanelDataset ds;
    ds.outcome_kind = OutcomeKind::count;
    const int n = n_dist(rng);
    for (int i = 0; i < n; ++i) {
        const int g = i == 0 ? 0 : i == 1 ? 1 : static_cast<int>(coin(rng));
        ds.units.push_back({std::to_string(i), g, double(level(rng)), double(level(rng)), {}});
    }
    if (overlap) {
        std::vector<bool> has_control(max_level + 1, false);
        for (const auto& u : ds.units) {
            if (u.group == 0) has_control[static_cast<int>(u.y_pre)] = true;
        }
        for (auto& u : ds.units) {
            if (u.group == 1 && !has_control[static_cast<int>(u.y_pre)]) {
                ds.units.push_back({u.unit_id + "c", 0, u.y_pre, double(level(rng)), {}});
                has_control[static_cast<int>(u.y_pre)] = true;
            }
        }
    }
    return ds;
}

// Random continuous panel with at least two distinct control y_pre values.
inline PanelDataset random_continuous(std::mt19937_64& rng, int max_n) {
    std::uniform_int_distribution<int> n_dist(6, max_n);
    std::normal_distribution<double> normal(0.0, 2.0);
    std::bernoulli_distribution coin(0.5);
    PanelDataset ds;
    const int n = n_dist(rng);
    for (int i = 0; i < n; ++i) {
        const int g = i < 2 ? 0 : i == 2 ? 1 : static_cast<int>(coin(rng));
        const double pre = normal(rng);
        ds.units.push_back({std::to_string(i), g, pre, 0.7 * pre + normal(rng), {}});
    }
    return ds;
}

inline std::string to_wide_csv(const PanelDataset& ds) {
    std::ostringstream out;
    out.precision(17);
    out << "unit,group,y_pre,y_post\n";
    for (const auto& u : ds.units) out << u.unit_id << ',' << u.group << ',' << u.y_pre << ',' << u.y_post << '\n';
    return out.str();
}

}  // namespace testing
