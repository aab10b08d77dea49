#include "didldv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "didldv/errors.hpp"
#include "levels.hpp"

namespace didldv {

using detail::format_levels;
using detail::format_number;
using detail::tabulate_levels;

std::string_view to_string(StationarityMethod m) noexcept {
    switch (m) {
        case StationarityMethod::regression_slope: return "regression_slope";
        case StationarityMethod::discrete_differences: return "discrete_differences";
        case StationarityMethod::binary_auto: return "binary_auto";
    }
    return "regression_slope";
}

std::string_view to_string(Dominance d) noexcept {
    switch (d) {
        case Dominance::a: return "a";
        case Dominance::b: return "b";
        case Dominance::none: return "none";
    }
    return "none";
}

std::string_view to_string(BracketOrder o) noexcept {
    switch (o) {
        case BracketOrder::did_ge_ldv: return "did_ge_ldv";
        case BracketOrder::did_le_ldv: return "did_le_ldv";
        case BracketOrder::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

EstimatorSpec default_ldv_spec(const PanelDataset& ds) noexcept {
    return {ds.is_discrete() ? Method::ldv_nonparametric : Method::ldv_control_reg};
}

namespace {

void finish_slopes(StationarityReport& r) {
    double max_slope = -std::numeric_limits<double>::infinity();
    for (const auto& s : r.statistics) max_slope = std::max(max_slope, s.slope);
    if (r.statistics.empty()) {
        r.margin = 1.0;
        r.satisfied = true;
        r.warnings.push_back("fewer than two control-supported y_pre levels; no slope to evaluate");
    } else {
        r.margin = 1.0 - max_slope;
        r.satisfied = max_slope < 1.0;
    }
}

}  // namespace

StationarityReport check_stationarity(const PanelDataset& ds, StationarityOptions options) {
    if (ds.n_control() == 0) throw EstimationError("check_stationarity: control group empty");
    StationarityReport r;
    r.top_code = ds.top_code;

    if (!ds.is_discrete()) {
        r.method = StationarityMethod::regression_slope;
        const auto linear = ldv_regression(ds, RegressionVariant::control_only);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& u : ds.units) {
            if (u.group != 0) continue;
            lo = std::min(lo, u.y_pre);
            hi = std::max(hi, u.y_pre);
        }
        r.statistics.push_back({lo, hi, *linear.coefficient("y_pre")});
        if (options.quadratic) {
            const auto quad = ldv_regression(ds, RegressionVariant::control_only_quadratic);
            const double b1 = *quad.coefficient("y_pre");
            const double b2 = *quad.coefficient("y_pre_sq");
            r.statistics.push_back({lo, lo, b1 + 2.0 * b2 * lo});
            r.statistics.push_back({hi, hi, b1 + 2.0 * b2 * hi});
        }
        finish_slopes(r);
        r.warnings.push_back("slope of a fitted conditional-mean curve approximates the pointwise derivative condition");
        return r;
    }

    const auto levels = tabulate_levels(ds);
    std::vector<double> uncovered;
    std::optional<std::pair<double, double>> prev;
    for (const auto& [y, cell] : levels) {
        if (cell.n_control == 0) {
            uncovered.push_back(y);
            continue;
        }
        const double mean = cell.control_mean();
        r.conditional_means.push_back({y, mean, cell.n_control});
        if (prev) r.statistics.push_back({prev->first, y, (mean - prev->second) / (y - prev->first)});
        prev = {y, mean};
    }
    if (!uncovered.empty()) {
        r.warnings.push_back("y_pre level(s) " + format_levels(uncovered) +
                             " have no control units; differences involving them are unevaluable and excluded");
    }

    if (ds.outcome_kind == OutcomeKind::binary) {
        r.method = StationarityMethod::binary_auto;
        finish_slopes(r);
        r.satisfied = true;
    } else {
        r.method = StationarityMethod::discrete_differences;
        finish_slopes(r);
    }
    if (ds.top_code) {
        r.warnings.push_back("outcomes at or above " + std::to_string(*ds.top_code) + " were materialized as " +
                             std::to_string(*ds.top_code) +
                             "; conditional means understate those computed from untruncated counts");
    }
    return r;
}

MonotonicityReport check_monotonicity(const PanelDataset& ds, double epsilon) {
    std::map<double, std::pair<std::size_t, std::size_t>> counts;  // y -> (treated, control)
    std::size_t n1 = 0;
    std::size_t n0 = 0;
    for (const auto& u : ds.units) {
        auto& c = counts[u.y_pre];
        if (u.group == 1) {
            ++c.first;
            ++n1;
        } else {
            ++c.second;
            ++n0;
        }
    }
    if (n1 == 0 || n0 == 0) throw EstimationError("check_monotonicity: both groups must be nonempty");

    MonotonicityReport r;
    r.epsilon = epsilon;
    std::size_t cum1 = 0;
    std::size_t cum0 = 0;
    double viol_a = 0.0;
    double viol_b = 0.0;
    for (const auto& [y, c] : counts) {
        cum1 += c.first;
        cum0 += c.second;
        const double f1 = static_cast<double>(cum1) / static_cast<double>(n1);
        const double f0 = static_cast<double>(cum0) / static_cast<double>(n0);
        r.points.push_back(y);
        r.cdf_treated.push_back(f1);
        r.cdf_control.push_back(f0);
        viol_a = std::max(viol_a, f0 - f1);
        viol_b = std::max(viol_b, f1 - f0);
    }
    const bool holds_a = viol_a <= epsilon;
    const bool holds_b = viol_b <= epsilon;
    r.degenerate = holds_a && holds_b;
    if (holds_a) {
        r.direction = Dominance::a;
        r.max_violation = viol_a;
    } else if (holds_b) {
        r.direction = Dominance::b;
        r.max_violation = viol_b;
    } else {
        r.direction = Dominance::none;
        r.max_violation = std::min(viol_a, viol_b);
    }
    return r;
}

Lemma1Result lemma1_gap(const PanelDataset& ds) {
    detail::require_groups(ds, "lemma1_gap");
    Lemma1Result r;
    if (!ds.is_discrete()) {
        r.discrete = false;
        const auto fit = ldv_regression(ds, RegressionVariant::control_only);
        r.fitted_intercept = *fit.coefficient("intercept");
        r.fitted_slope = *fit.coefficient("y_pre") - 1.0;
        const auto m = group_moments(ds);
        const double treated = r.fitted_intercept + r.fitted_slope * m.treated_pre;
        const double control = r.fitted_intercept + r.fitted_slope * m.control_pre;
        r.gap = treated - control;
        return r;
    }

    const auto levels = tabulate_levels(ds);
    if (const auto missing = detail::unsupported_levels(levels); !missing.empty()) {
        throw OverlapError("lemma1_gap: treated y_pre level(s) without control units: " + format_levels(missing));
    }
    const double n1 = static_cast<double>(ds.n_treated());
    const double n0 = static_cast<double>(ds.n_control());
    double treated = 0.0;
    double control = 0.0;
    for (const auto& [y, cell] : levels) {
        if (cell.n_control == 0) continue;
        const DeltaPoint p{y, cell.control_mean() - y, static_cast<double>(cell.n_treated) / n1,
                           static_cast<double>(cell.n_control) / n0};
        treated += p.delta * p.p_treated;
        control += p.delta * p.p_control;
        r.table.push_back(p);
    }
    r.gap = treated - control;
    return r;
}

namespace {

bool at_least(double lhs, double rhs) {
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    return lhs >= rhs - kOrderTolerance * scale;
}

BracketOrder observed_order(double did, double ldv) {
    return did >= ldv ? BracketOrder::did_ge_ldv : BracketOrder::did_le_ldv;
}

}  // namespace

BracketReport predict_bracket(const StationarityReport& st, const MonotonicityReport& mono, const EstimateResult& did,
                              const EstimateResult& ldv, std::optional<Lemma1Result> lemma) {
    BracketReport r;
    r.did_method = did.spec.name();
    r.ldv_method = ldv.spec.name();
    r.lemma = std::move(lemma);

    if (!st.satisfied) {
        r.predicted = BracketOrder::indeterminate;
        r.rationale = "stationarity not satisfied (max slope " + format_number(1.0 - st.margin) +
                      " >= 1); no ordering implied";
    } else if (mono.direction == Dominance::a) {
        r.predicted = BracketOrder::did_ge_ldv;
        r.rationale = "stationarity holds and treated lagged outcomes are stochastically smaller (direction a)";
        if (mono.degenerate) r.rationale += "; CDFs coincide, so both orderings hold with equality";
    } else if (mono.direction == Dominance::b) {
        r.predicted = BracketOrder::did_le_ldv;
        r.rationale = "stationarity holds and treated lagged outcomes are stochastically larger (direction b)";
    } else {
        r.predicted = BracketOrder::indeterminate;
        r.rationale = "lagged-outcome CDFs cross (max violation " + format_number(mono.max_violation) +
                      "); no ordering implied";
    }

    auto& o = r.observed;
    o.mu0_did = did.mu0;
    o.mu0_ldv = ldv.mu0;
    o.tau_did = did.tau;
    o.tau_ldv = ldv.tau;
    o.gamma_did = did.gamma;
    o.gamma_ldv = ldv.gamma;
    o.tau_order = observed_order(did.tau, ldv.tau);
    if (did.gamma && ldv.gamma) o.gamma_order = observed_order(*did.gamma, *ldv.gamma);

    if (r.predicted != BracketOrder::indeterminate) {
        const bool ge = r.predicted == BracketOrder::did_ge_ldv;
        bool agree = ge ? at_least(did.tau, ldv.tau) : at_least(ldv.tau, did.tau);
        if (did.gamma && ldv.gamma) {
            agree = agree && (ge ? at_least(*did.gamma, *ldv.gamma) : at_least(*ldv.gamma, *did.gamma));
        }
        r.agreement = agree;
    }
    return r;
}

}  // namespace didldv
