#include "didldv/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

#include "csv.hpp"
#include "didldv/errors.hpp"

namespace didldv {

using detail::CsvTable;
using detail::parse_integer;
using detail::parse_real;

std::string_view to_string(OutcomeKind kind) noexcept {
    switch (kind) {
        case OutcomeKind::continuous: return "continuous";
        case OutcomeKind::count: return "count";
        case OutcomeKind::binary: return "binary";
    }
    return "continuous";
}

std::string_view to_string(Layout layout) noexcept {
    switch (layout) {
        case Layout::wide: return "wide";
        case Layout::long_: return "long";
        case Layout::contingency: return "contingency";
    }
    return "wide";
}

std::optional<OutcomeKind> parse_outcome_kind(std::string_view text) noexcept {
    if (text == "continuous") return OutcomeKind::continuous;
    if (text == "count") return OutcomeKind::count;
    if (text == "binary") return OutcomeKind::binary;
    return std::nullopt;
}

std::optional<Layout> parse_layout(std::string_view text) noexcept {
    if (text == "wide") return Layout::wide;
    if (text == "long") return Layout::long_;
    if (text == "contingency") return Layout::contingency;
    return std::nullopt;
}

std::size_t PanelDataset::n_treated() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(units.begin(), units.end(), [](const PanelUnit& u) { return u.group == 1; }));
}

std::size_t PanelDataset::n_control() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(units.begin(), units.end(), [](const PanelUnit& u) { return u.group == 0; }));
}

bool PanelDataset::has_strata() const noexcept {
    return std::any_of(units.begin(), units.end(), [](const PanelUnit& u) { return u.stratum.has_value(); });
}

GroupMoments group_moments(const PanelDataset& ds) {
    GroupMoments m;
    for (const auto& u : ds.units) {
        if (u.group == 1) {
            ++m.n_treated;
            m.treated_pre += u.y_pre;
            m.treated_post += u.y_post;
        } else {
            ++m.n_control;
            m.control_pre += u.y_pre;
            m.control_post += u.y_post;
        }
    }
    if (m.n_treated > 0) {
        m.treated_pre /= static_cast<double>(m.n_treated);
        m.treated_post /= static_cast<double>(m.n_treated);
    }
    if (m.n_control > 0) {
        m.control_pre /= static_cast<double>(m.n_control);
        m.control_post /= static_cast<double>(m.n_control);
    }
    return m;
}

bool ValidationReport::has(std::string_view code) const noexcept {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.code == code; });
}

std::string ValidationReport::summary() const {
    std::string out;
    std::set<std::string> seen;
    for (const auto& v : violations) {
        if (!seen.insert(v.code).second) continue;
        if (!out.empty()) out += "; ";
        out += v.code;
        if (!v.detail.empty()) out += " (" + v.detail + ")";
    }
    return out;
}

namespace {

std::string describe_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_outcome(ValidationReport& report, const PanelDataset& ds, std::size_t index, double y,
                   std::string_view which) {
    const auto& id = ds.units[index].unit_id;
    const std::string where = "unit '" + id + "' " + std::string(which) + "=" + describe_value(y);
    if (!std::isfinite(y)) {
        report.violations.push_back({"non-finite outcome", where, index});
        return;
    }
    switch (ds.outcome_kind) {
        case OutcomeKind::continuous: break;
        case OutcomeKind::binary:
            if (y != 0.0 && y != 1.0) report.violations.push_back({"outcome out of range", where, index});
            break;
        case OutcomeKind::count:
            if (y < 0.0) {
                report.violations.push_back({"outcome out of range", where, index});
            } else if (y != std::floor(y)) {
                report.violations.push_back({"non-integer count outcome", where, index});
            }
            break;
    }
}

}  // namespace

ValidationReport validate(const PanelDataset& ds) {
    ValidationReport report;
    std::size_t treated = 0;
    std::size_t control = 0;
    for (std::size_t i = 0; i < ds.units.size(); ++i) {
        const auto& u = ds.units[i];
        if (u.group == 1) {
            ++treated;
        } else if (u.group == 0) {
            ++control;
        } else {
            report.violations.push_back({"invalid group", "unit '" + u.unit_id + "' group=" + std::to_string(u.group), i});
        }
        check_outcome(report, ds, i, u.y_pre, "y_pre");
        check_outcome(report, ds, i, u.y_post, "y_post");
    }
    if (control == 0) report.violations.push_back({"control group empty", "", std::nullopt});
    if (treated == 0) report.violations.push_back({"treated group empty", "", std::nullopt});
    return report;
}

PanelDataset expand_contingency(const ContingencyTable& table, OutcomeKind kind) {
    std::set<std::tuple<int, std::int64_t, std::int64_t>> keys;
    std::int64_t totals[2] = {0, 0};
    for (const auto& cell : table.cells) {
        if (cell.group != 0 && cell.group != 1) {
            throw ValidationError("unknown group code " + std::to_string(cell.group) + " in contingency table");
        }
        if (cell.count < 0) {
            throw ValidationError("negative count " + std::to_string(cell.count) + " in contingency table");
        }
        if (!keys.emplace(cell.group, cell.y_pre_level, cell.y_post_level).second) {
            throw ValidationError("duplicate contingency cell (group=" + std::to_string(cell.group) +
                                  ", y_pre=" + std::to_string(cell.y_pre_level) +
                                  ", y_post=" + std::to_string(cell.y_post_level) + ")");
        }
        totals[cell.group] += cell.count;
    }
    if (totals[0] == 0) throw ValidationError("control group empty");
    if (totals[1] == 0) throw ValidationError("treated group empty");

    const auto materialize = [&](std::int64_t level) {
        if (table.top_code && level >= *table.top_code) return static_cast<double>(*table.top_code);
        return static_cast<double>(level);
    };

    PanelDataset ds;
    ds.outcome_kind = kind;
    ds.top_code = table.top_code;
    ds.units.reserve(static_cast<std::size_t>(totals[0] + totals[1]));
    std::size_t next_id = 1;
    for (const auto& cell : table.cells) {
        const double pre = materialize(cell.y_pre_level);
        const double post = materialize(cell.y_post_level);
        for (std::int64_t k = 0; k < cell.count; ++k) {
            ds.units.push_back({std::to_string(next_id++), cell.group, pre, post, std::nullopt});
        }
    }
    return ds;
}

namespace {

std::size_t require_column(const CsvTable& t, std::string_view name) {
    auto idx = t.column(name);
    if (!idx) throw ParseError(1, "missing column '" + std::string(name) + "'");
    return *idx;
}

void reject_unknown_columns(const CsvTable& t, std::initializer_list<std::string_view> allowed) {
    for (const auto& h : t.header) {
        if (std::find(allowed.begin(), allowed.end(), h) == allowed.end()) {
            throw ParseError(1, "unexpected column '" + h + "'");
        }
    }
}

int parse_group(const std::string& text, std::size_t line) {
    const auto g = parse_integer(text);
    if (!g || (*g != 0 && *g != 1)) {
        throw ValidationError("line " + std::to_string(line) + ": unknown group code '" + text + "'");
    }
    return static_cast<int>(*g);
}

double parse_outcome(const std::string& text, std::size_t line, std::string_view column) {
    if (text.empty()) throw ParseError(line, "missing value for '" + std::string(column) + "'");
    const auto v = parse_real(text);
    if (!v) throw ParseError(line, "malformed number '" + text + "' in column '" + std::string(column) + "'");
    return *v;
}

std::optional<std::string> parse_stratum(const CsvTable& t, const detail::CsvRow& row) {
    const auto idx = t.column("stratum");
    if (!idx || row.fields[*idx].empty()) return std::nullopt;
    return row.fields[*idx];
}

PanelDataset load_wide(const CsvTable& t, OutcomeKind kind) {
    reject_unknown_columns(t, {"unit", "group", "y_pre", "y_post", "stratum"});
    const auto c_unit = require_column(t, "unit");
    const auto c_group = require_column(t, "group");
    const auto c_pre = require_column(t, "y_pre");
    const auto c_post = require_column(t, "y_post");

    PanelDataset ds;
    ds.outcome_kind = kind;
    std::set<std::string> seen;
    for (const auto& row : t.rows) {
        const auto& id = row.fields[c_unit];
        if (id.empty()) throw ParseError(row.line, "missing unit identifier");
        if (!seen.insert(id).second) {
            throw ValidationError("line " + std::to_string(row.line) + ": unit '" + id + "' appears more than once");
        }
        ds.units.push_back({id, parse_group(row.fields[c_group], row.line),
                            parse_outcome(row.fields[c_pre], row.line, "y_pre"),
                            parse_outcome(row.fields[c_post], row.line, "y_post"), parse_stratum(t, row)});
    }
    return ds;
}

bool period_less(const std::string& a, const std::string& b) {
    const auto na = parse_real(a);
    const auto nb = parse_real(b);
    if (na && nb) return *na < *nb;
    return a < b;
}

PanelDataset load_long(const CsvTable& t, OutcomeKind kind) {
    reject_unknown_columns(t, {"unit", "period", "group", "y", "stratum"});
    const auto c_unit = require_column(t, "unit");
    const auto c_period = require_column(t, "period");
    const auto c_group = require_column(t, "group");
    const auto c_y = require_column(t, "y");

    std::vector<std::string> periods;
    for (const auto& row : t.rows) {
        const auto& p = row.fields[c_period];
        if (p.empty()) throw ParseError(row.line, "missing period");
        if (std::find(periods.begin(), periods.end(), p) == periods.end()) periods.push_back(p);
    }
    if (periods.size() != 2) {
        throw ValidationError("long layout requires exactly two distinct period values, found " +
                              std::to_string(periods.size()));
    }
    const std::string pre_label = period_less(periods[0], periods[1]) ? periods[0] : periods[1];

    struct Pending {
        PanelUnit unit;
        int seen_pre = 0;
        int seen_post = 0;
        std::size_t first_line = 0;
    };
    std::vector<Pending> pending;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& row : t.rows) {
        const auto& id = row.fields[c_unit];
        if (id.empty()) throw ParseError(row.line, "missing unit identifier");
        const int group = parse_group(row.fields[c_group], row.line);
        const double y = parse_outcome(row.fields[c_y], row.line, "y");
        const auto stratum = parse_stratum(t, row);

        auto [it, inserted] = index.try_emplace(id, pending.size());
        if (inserted) {
            pending.push_back({{id, group, 0.0, 0.0, stratum}, 0, 0, row.line});
        }
        auto& p = pending[it->second];
        if (p.unit.group != group) {
            throw ValidationError("line " + std::to_string(row.line) + ": unit '" + id + "' changes group");
        }
        if (p.unit.stratum != stratum) {
            throw ValidationError("line " + std::to_string(row.line) + ": unit '" + id + "' changes stratum");
        }
        if (row.fields[c_period] == pre_label) {
            ++p.seen_pre;
            p.unit.y_pre = y;
        } else {
            ++p.seen_post;
            p.unit.y_post = y;
        }
    }

    PanelDataset ds;
    ds.outcome_kind = kind;
    ds.units.reserve(pending.size());
    for (auto& p : pending) {
        if (p.seen_pre != 1 || p.seen_post != 1) {
            throw ValidationError("unit '" + p.unit.unit_id + "' (first seen at line " + std::to_string(p.first_line) +
                                  ") appears in " + std::to_string(p.seen_pre + p.seen_post) +
                                  " rows; expected exactly one per period");
        }
        ds.units.push_back(std::move(p.unit));
    }
    return ds;
}

struct Level {
    std::int64_t value;
    bool open_ended;
};

Level parse_level(std::string text, std::size_t line, std::string_view column) {
    bool open = false;
    if (!text.empty() && text.back() == '+') {
        open = true;
        text.pop_back();
    }
    const auto v = parse_integer(text);
    if (!v) throw ParseError(line, "malformed integer level '" + text + "' in column '" + std::string(column) + "'");
    return {*v, open};
}

}  // namespace

ContingencyTable parse_contingency(std::istream& source, std::optional<int> top_code) {
    const auto t = detail::read_csv(source);
    reject_unknown_columns(t, {"group", "y_pre", "y_post", "count"});
    const auto c_group = require_column(t, "group");
    const auto c_pre = require_column(t, "y_pre");
    const auto c_post = require_column(t, "y_post");
    const auto c_count = require_column(t, "count");

    ContingencyTable table;
    std::optional<std::int64_t> declared;
    const auto note_open = [&](const Level& level, std::size_t line) {
        if (!level.open_ended) return;
        if (declared && *declared != level.value) {
            throw ValidationError("line " + std::to_string(line) + ": conflicting open-ended levels " +
                                  std::to_string(*declared) + "+ and " + std::to_string(level.value) + "+");
        }
        declared = level.value;
    };
    for (const auto& row : t.rows) {
        const auto pre = parse_level(row.fields[c_pre], row.line, "y_pre");
        const auto post = parse_level(row.fields[c_post], row.line, "y_post");
        note_open(pre, row.line);
        note_open(post, row.line);
        const auto count = parse_integer(row.fields[c_count]);
        if (!count) throw ParseError(row.line, "malformed count '" + row.fields[c_count] + "'");
        if (*count < 0) throw ValidationError("line " + std::to_string(row.line) + ": negative count");
        table.cells.push_back({pre.value, post.value, parse_group(row.fields[c_group], row.line), *count});
    }
    if (top_code) {
        if (declared && *top_code > *declared) {
            throw ValidationError("top code " + std::to_string(*top_code) + " exceeds the table's open-ended level " +
                                  std::to_string(*declared) + "+");
        }
        table.top_code = top_code;
    } else if (declared) {
        table.top_code = static_cast<int>(*declared);
    }
    return table;
}

PanelDataset load_panel(std::istream& source, Layout layout, OutcomeKind kind, std::optional<int> top_code) {
    PanelDataset ds;
    switch (layout) {
        case Layout::wide: ds = load_wide(detail::read_csv(source), kind); break;
        case Layout::long_: ds = load_long(detail::read_csv(source), kind); break;
        case Layout::contingency: ds = expand_contingency(parse_contingency(source, top_code), kind); break;
    }
    const auto report = validate(ds);
    if (!report.ok()) throw ValidationError(report.summary());
    return ds;
}

}  // namespace didldv
