#include "didldv/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "didldv/errors.hpp"
#include "levels.hpp"

#ifndef DIDLDV_VERSION
#define DIDLDV_VERSION "0.0.0"
#endif

namespace didldv {

std::string_view tool_version() noexcept { return DIDLDV_VERSION; }

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json string_list(const std::vector<std::string>& items) {
    Json out = Json::array();
    for (const auto& s : items) out.push_back(s);
    return out;
}

}  // namespace

Json to_json(const ValidationReport& r) {
    Json violations = Json::array();
    for (const auto& v : r.violations) {
        Json item{{"code", v.code}, {"detail", v.detail}};
        item["unit_index"] = v.unit_index ? Json(*v.unit_index) : Json(nullptr);
        violations.push_back(std::move(item));
    }
    return Json{{"ok", r.ok()}, {"violations", std::move(violations)}};
}

Json describe(const PanelDataset& ds) {
    Json out{{"n", ds.size()},
             {"n_treated", ds.n_treated()},
             {"n_control", ds.n_control()},
             {"outcome_kind", to_string(ds.outcome_kind)}};
    out["top_code"] = ds.top_code ? Json(*ds.top_code) : Json(nullptr);
    out["stratified_input"] = ds.has_strata();
    return out;
}

Json to_json(const EstimateResult& r) {
    Json coefficients = Json::object();
    for (const auto& [k, v] : r.coefficients) coefficients[k] = v;
    return Json{{"method", r.spec.name()},
                {"mu1", r.mu1},
                {"mu0", r.mu0},
                {"tau", r.tau},
                {"gamma", optional_number(r.gamma)},
                {"n_treated", r.n_treated},
                {"n_control", r.n_control},
                {"coefficients", std::move(coefficients)},
                {"warnings", string_list(r.warnings)}};
}

Json to_json(const StationarityReport& r) {
    Json stats = Json::array();
    for (const auto& s : r.statistics) stats.push_back({{"from", s.from}, {"to", s.to}, {"slope", s.slope}});
    Json means = Json::array();
    for (const auto& m : r.conditional_means) {
        means.push_back({{"y_pre", m.level}, {"mean_y_post", m.mean}, {"n_control", m.n_control}});
    }
    Json out{{"method", to_string(r.method)},
             {"satisfied", r.satisfied},
             {"margin", r.margin},
             {"slopes", std::move(stats)},
             {"conditional_means", std::move(means)}};
    out["top_code"] = r.top_code ? Json(*r.top_code) : Json(nullptr);
    out["truncated"] = r.top_code.has_value();
    out["warnings"] = string_list(r.warnings);
    return out;
}

Json to_json(const MonotonicityReport& r) {
    Json cdf = Json::array();
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        cdf.push_back({{"y", r.points[i]}, {"cdf_treated", r.cdf_treated[i]}, {"cdf_control", r.cdf_control[i]}});
    }
    return Json{{"direction", to_string(r.direction)},
                {"degenerate", r.degenerate},
                {"max_violation", r.max_violation},
                {"epsilon", r.epsilon},
                {"cdf", std::move(cdf)}};
}

Json to_json(const Lemma1Result& r) {
    Json out{{"discrete", r.discrete}, {"gap", r.gap}};
    if (r.discrete) {
        Json table = Json::array();
        for (const auto& p : r.table) {
            table.push_back(
                {{"y", p.y}, {"delta", p.delta}, {"p_treated", p.p_treated}, {"p_control", p.p_control}});
        }
        out["delta"] = std::move(table);
    } else {
        out["fitted_delta"] = {{"intercept", r.fitted_intercept}, {"slope", r.fitted_slope}};
    }
    return out;
}

Json to_json(const BracketReport& r) {
    const auto& o = r.observed;
    Json observed{{"mu0_did", o.mu0_did},
                  {"mu0_ldv", o.mu0_ldv},
                  {"tau_did", o.tau_did},
                  {"tau_ldv", o.tau_ldv},
                  {"gamma_did", optional_number(o.gamma_did)},
                  {"gamma_ldv", optional_number(o.gamma_ldv)},
                  {"tau_order", to_string(o.tau_order)}};
    observed["gamma_order"] = o.gamma_order ? Json(to_string(*o.gamma_order)) : Json(nullptr);
    Json out{{"did_method", r.did_method},
             {"ldv_method", r.ldv_method},
             {"predicted", to_string(r.predicted)},
             {"rationale", r.rationale},
             {"observed", std::move(observed)}};
    out["agreement"] = r.agreement ? Json(*r.agreement) : Json(nullptr);
    out["lemma1"] = r.lemma ? to_json(*r.lemma) : Json(nullptr);
    return out;
}

Json to_json(const IntervalEstimate& r) {
    return Json{{"target", r.target},
                {"point", r.point},
                {"lower", r.lower},
                {"upper", r.upper},
                {"std_error", r.std_error},
                {"level", r.level},
                {"significant", r.significant},
                {"replicates_used", r.replicates_used},
                {"replicates_dropped", r.replicates_dropped}};
}

Json to_json(const BootstrapSpec& s) {
    return Json{{"replicates", s.replicates},
                {"seed", s.seed},
                {"level", s.level},
                {"stratify_by_group", s.stratify_by_group}};
}

Json to_json(const ComparisonReport& r) {
    Json out;
    out["dataset"] = Json{{"n", r.n}, {"outcome_kind", to_string(r.outcome_kind)}};
    out["dataset"]["top_code"] = r.top_code ? Json(*r.top_code) : Json(nullptr);
    out["warnings"] = string_list(r.warnings);

    Json estimates = Json::array();
    for (const auto& e : r.estimates) {
        if (e.result) {
            auto item = to_json(*e.result);
            item["available"] = true;
            estimates.push_back(std::move(item));
        } else {
            estimates.push_back({{"method", e.spec.name()}, {"available", false}, {"error", e.error}});
        }
    }
    out["estimates"] = std::move(estimates);
    out["stationarity"] = r.stationarity ? to_json(*r.stationarity) : Json(nullptr);
    out["monotonicity"] = r.monotonicity ? to_json(*r.monotonicity) : Json(nullptr);
    out["bracket"] = r.bracket ? to_json(*r.bracket) : Json(nullptr);
    if (!r.bracket_error.empty()) out["bracket_error"] = r.bracket_error;
    if (r.bootstrap) {
        Json intervals = Json::array();
        for (const auto& t : r.intervals) {
            if (t.interval) {
                intervals.push_back(to_json(*t.interval));
            } else {
                intervals.push_back({{"target", t.target}, {"error", t.error}});
            }
        }
        out["bootstrap"] = {{"spec", to_json(*r.bootstrap)}, {"intervals", std::move(intervals)}};
    } else {
        out["bootstrap"] = nullptr;
    }
    return out;
}

Json to_json(const DgpSpec& s) {
    return Json{{"family", to_string(s.family)},   {"n", s.n},
                {"tau_true", s.tau_true},          {"beta", s.beta},
                {"selection", s.selection},        {"noise_sd", s.noise_sd},
                {"baseline_mean", s.baseline_mean}, {"baseline_sd", s.baseline_sd},
                {"trend", s.trend}};
}

Json to_json(const MonteCarloSummary& s) {
    Json estimators = Json::array();
    for (const auto& e : s.estimators) {
        estimators.push_back({{"estimator", e.name},
                              {"mean", e.mean},
                              {"bias", e.bias},
                              {"sd", e.sd},
                              {"mc_se", e.mc_se}});
    }
    return Json{{"dgp", to_json(s.spec)},
                {"seed", s.seed},
                {"replications", s.replications},
                {"completed", s.completed},
                {"failed", s.failed},
                {"estimators", std::move(estimators)},
                {"freq_did_ge_ldv", s.freq_did_ge_ldv},
                {"stationarity_rate", s.stationarity_rate},
                {"direction_a_rate", s.direction_a_rate},
                {"direction_b_rate", s.direction_b_rate},
                {"premises_met", s.premises_met},
                {"premises_agree", s.premises_agree}};
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

Json to_json(const Envelope& e) {
    Json out{{"schema_version", kReportSchemaVersion},
             {"tool", "didldv"},
             {"version", tool_version()},
             {"command", e.command},
             {"flags", e.flags}};
    out["input_digest"] = e.input_digest ? Json("sha256:" + *e.input_digest) : Json(nullptr);
    out["timestamp"] = e.timestamp ? Json(*e.timestamp) : Json(nullptr);
    out["payload"] = e.payload;
    return out;
}

namespace {

std::string scalar_text(const Json& v) {
    if (v.is_null()) return "n/a";
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return v.dump();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (!std::isfinite(d)) return "n/a";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f", d);
        if (std::string_view(buf) == "-0.000") return "0.000";
        return buf;
    }
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

bool is_scalar(const Json& v) { return !v.is_object() && !v.is_array(); }

std::string escape_cell(std::string s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += "\\|";
        else if (c == '\n') out += ' ';
        else out += c;
    }
    return out;
}

void render(std::ostringstream& md, const std::string& title, const Json& value, int depth);

void render_table(std::ostringstream& md, const Json& rows) {
    std::vector<std::string> columns;
    for (const auto& row : rows) {
        for (const auto& [k, v] : row.items()) {
            if (is_scalar(v) && std::find(columns.begin(), columns.end(), k) == columns.end()) columns.push_back(k);
        }
    }
    md << '|';
    for (const auto& c : columns) md << ' ' << escape_cell(c) << " |";
    md << "\n|";
    for (std::size_t i = 0; i < columns.size(); ++i) md << "---|";
    md << '\n';
    for (const auto& row : rows) {
        md << '|';
        for (const auto& c : columns) {
            md << ' ' << (row.contains(c) ? escape_cell(scalar_text(row[c])) : std::string()) << " |";
        }
        md << '\n';
    }
    md << '\n';
}

void render_array(std::ostringstream& md, const std::string& title, const Json& arr, int depth) {
    if (arr.empty()) {
        md << "- " << title << ": none\n";
        return;
    }
    if (std::all_of(arr.begin(), arr.end(), is_scalar)) {
        md << "- " << title << ":";
        for (const auto& v : arr) md << "\n  - " << scalar_text(v);
        md << '\n';
        return;
    }
    if (std::all_of(arr.begin(), arr.end(), [](const Json& v) { return v.is_object(); })) {
        md << '\n' << std::string(static_cast<std::size_t>(depth), '#') << ' ' << title << "\n\n";
        render_table(md, arr);
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto& row = arr[i];
            std::string label = title + " " + std::to_string(i + 1);
            for (const char* key : {"method", "target", "estimator"}) {
                if (row.contains(key) && row[key].is_string()) {
                    label = row[key].get<std::string>();
                    break;
                }
            }
            for (const auto& [k, v] : row.items()) {
                if (is_scalar(v) || v.empty()) continue;
                render(md, label + ": " + k, v, depth + 1);
            }
        }
        return;
    }
    for (std::size_t i = 0; i < arr.size(); ++i) render(md, title + " " + std::to_string(i + 1), arr[i], depth);
}

void render(std::ostringstream& md, const std::string& title, const Json& value, int depth) {
    if (is_scalar(value)) {
        md << "- " << title << ": " << scalar_text(value) << '\n';
        return;
    }
    if (value.is_array()) {
        render_array(md, title, value, depth);
        return;
    }
    md << '\n' << std::string(static_cast<std::size_t>(std::min(depth, 6)), '#') << ' ' << title << "\n\n";
    for (const auto& [k, v] : value.items()) {
        if (is_scalar(v)) md << "- " << k << ": " << scalar_text(v) << '\n';
    }
    for (const auto& [k, v] : value.items()) {
        if (!is_scalar(v)) render(md, k, v, std::min(depth + 1, 6));
    }
}

}  // namespace

std::string render_markdown(const Json& envelope) {
    std::ostringstream md;
    md << "# didldv " << scalar_text(envelope.value("command", Json("report"))) << " report\n\n";
    for (const char* key : {"tool", "version", "schema_version", "input_digest", "timestamp"}) {
        if (envelope.contains(key)) md << "- " << key << ": " << scalar_text(envelope[key]) << '\n';
    }
    if (envelope.contains("flags")) render(md, "Flags", envelope["flags"], 2);
    if (envelope.contains("payload")) {
        for (const auto& [k, v] : envelope["payload"].items()) render(md, k, v, 2);
    }
    return md.str();
}

void write_cdf_csv(std::ostream& out, const MonotonicityReport& r) {
    out << "y,cdf_treated,cdf_control\n";
    char buf[128];
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r.points[i], r.cdf_treated[i], r.cdf_control[i]);
        out << buf;
    }
}

void write_fit_csv(std::ostream& out, const PanelDataset& ds) {
    std::optional<EstimateResult> linear, quadratic;
    try {
        linear = ldv_regression(ds, RegressionVariant::control_only);
    } catch (const EstimationError&) {
    }
    try {
        quadratic = ldv_regression(ds, RegressionVariant::control_only_quadratic);
    } catch (const EstimationError&) {
    }
    const auto fitted = [](const std::optional<EstimateResult>& fit, double y) -> std::string {
        if (!fit) return "";
        double v = *fit->coefficient("intercept") + *fit->coefficient("y_pre") * y;
        if (const auto sq = fit->coefficient("y_pre_sq")) v += *sq * y * y;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    };

    out << "y,conditional_mean,n_control,fitted_linear,fitted_quadratic\n";
    char buf[128];
    if (ds.is_discrete()) {
        for (const auto& [y, cell] : detail::tabulate_levels(ds)) {
            if (cell.n_control == 0) continue;
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu,", y, cell.control_mean(), cell.n_control);
            out << buf << fitted(linear, y) << ',' << fitted(quadratic, y) << '\n';
        }
        return;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& u : ds.units) {
        if (u.group != 0) continue;
        lo = std::min(lo, u.y_pre);
        hi = std::max(hi, u.y_pre);
    }
    if (!(lo <= hi)) return;
    constexpr int kGrid = 51;
    for (int i = 0; i < kGrid; ++i) {
        const double y = lo + (hi - lo) * static_cast<double>(i) / (kGrid - 1);
        std::snprintf(buf, sizeof buf, "%.17g,,,", y);
        out << buf << fitted(linear, y) << ',' << fitted(quadratic, y) << '\n';
    }
}

}  // namespace didldv
