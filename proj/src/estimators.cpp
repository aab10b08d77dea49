#include "didldv/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "didldv/errors.hpp"
#include "levels.hpp"

namespace didldv {

using detail::format_levels;
using detail::require_groups;
using detail::tabulate_levels;

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::did_moment: return "did_moment";
        case Method::ldv_control_reg: return "ldv_control_reg";
        case Method::ldv_control_reg_quadratic: return "ldv_control_reg_quadratic";
        case Method::ldv_pooled_reg: return "ldv_pooled_reg";
        case Method::ldv_nonparametric: return "ldv_nonparametric";
        case Method::ipw_did: return "ipw_did";
        case Method::ipw_ldv: return "ipw_ldv";
    }
    return "did_moment";
}

std::string_view to_string(Propensity p) noexcept {
    return p == Propensity::logistic ? "logistic" : "saturated_discrete";
}

std::optional<Method> parse_method(std::string_view text) noexcept {
    struct Alias {
        std::string_view name;
        Method method;
    };
    static constexpr Alias aliases[] = {
        {"did", Method::did_moment},
        {"ldv-control", Method::ldv_control_reg},
        {"ldv-quadratic", Method::ldv_control_reg_quadratic},
        {"ldv-pooled", Method::ldv_pooled_reg},
        {"ldv-np", Method::ldv_nonparametric},
        {"ipw-did", Method::ipw_did},
        {"ipw-ldv", Method::ipw_ldv},
    };
    for (const auto& a : aliases) {
        if (text == a.name || text == to_string(a.method)) return a.method;
    }
    return std::nullopt;
}

std::optional<Propensity> parse_propensity(std::string_view text) noexcept {
    if (text == "saturated" || text == "saturated_discrete") return Propensity::saturated_discrete;
    if (text == "logistic") return Propensity::logistic;
    return std::nullopt;
}

std::string EstimatorSpec::name() const {
    std::string out = stratified ? "stratified:" : "";
    out += to_string(method);
    if (method == Method::ipw_ldv && propensity == Propensity::logistic) out += "(logistic)";
    return out;
}

std::optional<double> EstimateResult::coefficient(std::string_view name) const {
    for (const auto& [k, v] : coefficients) {
        if (k == name) return v;
    }
    return std::nullopt;
}

EstimateResult make_result(EstimatorSpec spec, double mu1, double mu0, std::size_t n_treated,
                           std::size_t n_control) {
    EstimateResult r;
    r.spec = spec;
    r.mu1 = mu1;
    r.mu0 = mu0;
    r.tau = mu1 - mu0;
    if (mu0 > 0.0) {
        r.gamma = mu1 / mu0;
    } else {
        r.warnings.push_back("gamma not reported: counterfactual mean mu0 <= 0");
    }
    r.n_treated = n_treated;
    r.n_control = n_control;
    return r;
}

EstimateResult did_moment(const PanelDataset& ds) {
    require_groups(ds, "did_moment");
    const auto m = group_moments(ds);
    const double mu0 = m.treated_pre + m.control_post - m.control_pre;
    return make_result({Method::did_moment}, m.treated_post, mu0, m.n_treated, m.n_control);
}

EstimateResult ldv_regression(const PanelDataset& ds, RegressionVariant variant) {
    const Method method = variant == RegressionVariant::control_only ? Method::ldv_control_reg
                          : variant == RegressionVariant::control_only_quadratic ? Method::ldv_control_reg_quadratic
                                                                                 : Method::ldv_pooled_reg;
    const std::string who(to_string(method));
    require_groups(ds, who.c_str());
    const auto m = group_moments(ds);

    if (variant == RegressionVariant::pooled) {
        Design design;
        std::vector<double> ones(ds.size(), 1.0), group, pre, post;
        group.reserve(ds.size());
        pre.reserve(ds.size());
        post.reserve(ds.size());
        for (const auto& u : ds.units) {
            group.push_back(static_cast<double>(u.group));
            pre.push_back(u.y_pre);
            post.push_back(u.y_post);
        }
        design.add("intercept", std::move(ones));
        design.add("group", std::move(group));
        design.add("y_pre", std::move(pre));
        const auto fit = fit_least_squares(design, post);
        const double tau = fit.coefficient("group");
        auto r = make_result({method}, m.treated_post, m.treated_post - tau, m.n_treated, m.n_control);
        for (std::size_t j = 0; j < fit.regressors.size(); ++j) {
            r.coefficients.emplace_back(fit.regressors[j], fit.coefficients[j]);
        }
        return r;
    }

    const bool quadratic = variant == RegressionVariant::control_only_quadratic;
    const std::size_t degree = quadratic ? 2 : 1;
    std::vector<double> pre, post;
    std::set<double> distinct;
    double treated_sq = 0.0;
    for (const auto& u : ds.units) {
        if (u.group == 0) {
            pre.push_back(u.y_pre);
            post.push_back(u.y_post);
            distinct.insert(u.y_pre);
        } else {
            treated_sq += u.y_pre * u.y_pre;
        }
    }
    treated_sq /= static_cast<double>(m.n_treated);
    if (distinct.size() < degree + 1) {
        throw SingularityError(who + ": control group has " + std::to_string(distinct.size()) +
                               " distinct y_pre value(s); the degree-" + std::to_string(degree) +
                               " fit needs at least " + std::to_string(degree + 1));
    }

    Design design;
    design.add("intercept", std::vector<double>(pre.size(), 1.0));
    if (quadratic) {
        std::vector<double> sq(pre.size());
        std::transform(pre.begin(), pre.end(), sq.begin(), [](double y) { return y * y; });
        design.add("y_pre", pre);
        design.add("y_pre_sq", std::move(sq));
    } else {
        design.add("y_pre", pre);
    }
    const auto fit = fit_least_squares(design, post);

    // Mean of the fitted curve over treated y_pre values.
    double mu0 = fit.coefficients[0] + fit.coefficients[1] * m.treated_pre;
    if (quadratic) mu0 += fit.coefficients[2] * treated_sq;

    auto r = make_result({method}, m.treated_post, mu0, m.n_treated, m.n_control);
    for (std::size_t j = 0; j < fit.regressors.size(); ++j) {
        r.coefficients.emplace_back(fit.regressors[j], fit.coefficients[j]);
    }
    return r;
}

namespace {

void require_discrete(const PanelDataset& ds, const char* who) {
    if (!ds.is_discrete()) {
        throw EstimationError(std::string(who) + " requires a discrete (binary or count) outcome");
    }
}

}  // namespace

EstimateResult ldv_nonparametric(const PanelDataset& ds) {
    require_discrete(ds, "ldv_nonparametric");
    require_groups(ds, "ldv_nonparametric");
    const auto levels = tabulate_levels(ds);
    if (const auto missing = detail::unsupported_levels(levels); !missing.empty()) {
        throw OverlapError("ldv_nonparametric: treated y_pre level(s) without control units: " +
                           format_levels(missing));
    }
    const auto m = group_moments(ds);
    double weighted = 0.0;
    std::vector<Coefficient> means;
    for (const auto& [y, cell] : levels) {
        if (cell.n_control == 0) continue;
        const double mean = cell.control_mean();
        weighted += mean * static_cast<double>(cell.n_treated);
        means.emplace_back("E[y_post|G=0,y_pre=" + detail::format_number(y) + "]", mean);
    }
    auto r = make_result({Method::ldv_nonparametric}, m.treated_post, weighted / static_cast<double>(m.n_treated),
                         m.n_treated, m.n_control);
    r.coefficients = std::move(means);
    return r;
}

EstimateResult ipw_did(const PanelDataset& ds) {
    require_groups(ds, "ipw_did");
    const auto m = group_moments(ds);
    const double n = static_cast<double>(ds.size());
    const double e = static_cast<double>(m.n_treated) / n;
    const double odds = e / (1.0 - e);
    double treated_pre_sum = 0.0;
    double control_change_sum = 0.0;
    for (const auto& u : ds.units) {
        if (u.group == 1) {
            treated_pre_sum += u.y_pre;
        } else {
            control_change_sum += u.y_post - u.y_pre;
        }
    }
    const double mu0 = (treated_pre_sum + odds * control_change_sum) / static_cast<double>(m.n_treated);
    auto r = make_result({Method::ipw_did}, m.treated_post, mu0, m.n_treated, m.n_control);
    r.coefficients.emplace_back("propensity", e);
    return r;
}

double LogisticFit::probability(double y) const noexcept {
    const double eta = intercept + slope * y;
    return 1.0 / (1.0 + std::exp(-eta));
}

LogisticFit fit_logistic_propensity(const PanelDataset& ds) {
    require_groups(ds, "logistic propensity");
    const std::size_t n = ds.size();
    const double share = static_cast<double>(ds.n_treated()) / static_cast<double>(n);

    LogisticFit fit;
    fit.intercept = std::log(share / (1.0 - share));
    Design design;
    std::vector<double> pre(n);
    for (std::size_t i = 0; i < n; ++i) pre[i] = ds.units[i].y_pre;
    design.add("intercept", std::vector<double>(n, 1.0));
    design.add("y_pre", pre);

    std::vector<double> working(n), weights(n);
    for (int iter = 1; iter <= kLogisticMaxIterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            const double eta = fit.intercept + fit.slope * pre[i];
            const double p = 1.0 / (1.0 + std::exp(-eta));
            const double w = p * (1.0 - p);
            weights[i] = w;
            working[i] = w > 0.0 ? eta + (ds.units[i].group - p) / w : eta;
        }
        LeastSquaresFit step;
        try {
            step = fit_weighted_least_squares(design, working, weights);
        } catch (const SingularityError& e) {
            throw FitError(std::string("logistic propensity: degenerate information matrix at iteration ") +
                           std::to_string(iter) + " (" + e.what() + ")");
        }
        const double change = std::max(std::abs(step.coefficients[0] - fit.intercept),
                                       std::abs(step.coefficients[1] - fit.slope));
        fit.intercept = step.coefficients[0];
        fit.slope = step.coefficients[1];
        fit.iterations = iter;
        if (!std::isfinite(fit.intercept) || !std::isfinite(fit.slope)) {
            throw FitError("logistic propensity: coefficients diverged");
        }
        if (change < kLogisticTolerance) return fit;
    }
    throw FitError("logistic propensity: no convergence within " + std::to_string(kLogisticMaxIterations) +
                   " iterations (possible separation)");
}

EstimateResult ipw_ldv(const PanelDataset& ds, Propensity propensity) {
    require_groups(ds, "ipw_ldv");
    const auto m = group_moments(ds);
    double weighted = 0.0;
    std::vector<Coefficient> coefficients;

    if (propensity == Propensity::saturated_discrete) {
        require_discrete(ds, "ipw_ldv(saturated_discrete)");
        const auto levels = tabulate_levels(ds);
        if (const auto missing = detail::unsupported_levels(levels); !missing.empty()) {
            throw PositivityError("ipw_ldv: propensity equals 1 at treated y_pre level(s) with no control units: " +
                                  format_levels(missing));
        }
        for (const auto& u : ds.units) {
            if (u.group == 1) continue;
            const auto& cell = levels.at(u.y_pre);
            const double e = static_cast<double>(cell.n_treated) / static_cast<double>(cell.n_treated + cell.n_control);
            weighted += e / (1.0 - e) * u.y_post;
        }
        for (const auto& [y, cell] : levels) {
            const double e = static_cast<double>(cell.n_treated) / static_cast<double>(cell.n_treated + cell.n_control);
            coefficients.emplace_back("e(y_pre=" + detail::format_number(y) + ")", e);
        }
    } else {
        const auto fit = fit_logistic_propensity(ds);
        for (const auto& u : ds.units) {
            if (u.group == 1) continue;
            const double e = fit.probability(u.y_pre);
            if (!(e < 1.0)) {
                throw PositivityError("ipw_ldv: logistic propensity rounds to 1 at y_pre=" +
                                      detail::format_number(u.y_pre));
            }
            weighted += e / (1.0 - e) * u.y_post;
        }
        coefficients.emplace_back("intercept", fit.intercept);
        coefficients.emplace_back("y_pre", fit.slope);
        coefficients.emplace_back("iterations", fit.iterations);
    }
    auto r = make_result({Method::ipw_ldv, propensity}, m.treated_post, weighted / static_cast<double>(m.n_treated),
                         m.n_treated, m.n_control);
    r.coefficients = std::move(coefficients);
    return r;
}

namespace {

EstimateResult estimate_pooled(const PanelDataset& ds, const EstimatorSpec& spec) {
    switch (spec.method) {
        case Method::did_moment: return did_moment(ds);
        case Method::ldv_control_reg: return ldv_regression(ds, RegressionVariant::control_only);
        case Method::ldv_control_reg_quadratic: return ldv_regression(ds, RegressionVariant::control_only_quadratic);
        case Method::ldv_pooled_reg: return ldv_regression(ds, RegressionVariant::pooled);
        case Method::ldv_nonparametric: return ldv_nonparametric(ds);
        case Method::ipw_did: return ipw_did(ds);
        case Method::ipw_ldv: return ipw_ldv(ds, spec.propensity);
    }
    throw EstimationError("unknown estimator");
}

}  // namespace

EstimateResult estimate(const PanelDataset& ds, const EstimatorSpec& spec) {
    if (spec.stratified) return stratified(ds, spec);
    return estimate_pooled(ds, spec);
}

EstimateResult stratified(const PanelDataset& ds, EstimatorSpec inner) {
    inner.stratified = false;
    require_groups(ds, "stratified");

    std::vector<std::optional<std::string>> order;
    std::vector<PanelDataset> parts;
    for (const auto& u : ds.units) {
        auto it = std::find(order.begin(), order.end(), u.stratum);
        std::size_t k = static_cast<std::size_t>(it - order.begin());
        if (it == order.end()) {
            order.push_back(u.stratum);
            PanelDataset part;
            part.outcome_kind = ds.outcome_kind;
            part.top_code = ds.top_code;
            parts.push_back(std::move(part));
        }
        parts[k].units.push_back(u);
    }

    const auto label = [](const std::optional<std::string>& s) { return s ? *s : std::string("<none>"); };
    const double n_treated = static_cast<double>(ds.n_treated());
    double mu1 = 0.0;
    double mu0 = 0.0;
    std::vector<Coefficient> coefficients;
    std::vector<std::string> warnings;
    std::size_t skipped = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto n1 = parts[k].n_treated();
        if (n1 == 0) {
            ++skipped;
            continue;
        }
        if (parts[k].n_control() == 0) {
            throw OverlapError("stratified: stratum '" + label(order[k]) + "' has treated but no control units");
        }
        EstimateResult part;
        try {
            part = estimate_pooled(parts[k], inner);
        } catch (const EstimationError& e) {
            throw EstimationError("stratified: stratum '" + label(order[k]) + "': " + e.what());
        }
        const double w = static_cast<double>(n1) / n_treated;
        mu1 += w * part.mu1;
        mu0 += w * part.mu0;
        coefficients.emplace_back("weight[" + label(order[k]) + "]", w);
        coefficients.emplace_back("mu0[" + label(order[k]) + "]", part.mu0);
        for (const auto& msg : part.warnings) warnings.push_back("stratum '" + label(order[k]) + "': " + msg);
    }
    if (skipped > 0) warnings.push_back(std::to_string(skipped) + " stratum/strata without treated units ignored");

    inner.stratified = true;
    auto r = make_result(inner, mu1, mu0, ds.n_treated(), ds.n_control());
    r.coefficients = std::move(coefficients);
    r.warnings.insert(r.warnings.begin(), warnings.begin(), warnings.end());
    return r;
}

}  // namespace didldv
