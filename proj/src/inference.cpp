#include "didldv/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "didldv/errors.hpp"
#include "didldv/rng.hpp"

namespace didldv {

void check_spec(const BootstrapSpec& spec) {
    if (spec.replicates < kMinIntervalReplicates) {
        throw InferenceError("bootstrap needs at least " + std::to_string(kMinIntervalReplicates) +
                             " replicates for interval output, got " + std::to_string(spec.replicates));
    }
    if (!(spec.level > 0.0 && spec.level < 1.0)) {
        throw InferenceError("confidence level must lie in (0, 1)");
    }
}

std::string_view to_string(Quantity q) noexcept {
    switch (q) {
        case Quantity::mu0: return "mu0";
        case Quantity::tau: return "tau";
        case Quantity::gamma: return "gamma";
    }
    return "tau";
}

std::optional<Quantity> parse_quantity(std::string_view text) noexcept {
    if (text == "mu0") return Quantity::mu0;
    if (text == "tau") return Quantity::tau;
    if (text == "gamma") return Quantity::gamma;
    return std::nullopt;
}

std::string Target::name() const {
    std::string out = std::string(to_string(quantity)) + "[" + first.name() + "]";
    if (second) out += " - " + std::string(to_string(quantity)) + "[" + second->name() + "]";
    return out;
}

namespace {

std::optional<EstimatorSpec> parse_estimator_token(std::string_view token) {
    EstimatorSpec spec;
    if (token.starts_with("stratified-")) {
        spec.stratified = true;
        token.remove_prefix(11);
    }
    if (token == "ipw-ldv-logistic") {
        spec.method = Method::ipw_ldv;
        spec.propensity = Propensity::logistic;
        return spec;
    }
    const auto m = parse_method(token);
    if (!m) return std::nullopt;
    spec.method = *m;
    return spec;
}

}  // namespace

std::optional<Target> parse_target(std::string_view text) {
    std::vector<std::string_view> parts;
    while (true) {
        const auto pos = text.find(':');
        parts.push_back(text.substr(0, pos));
        if (pos == std::string_view::npos) break;
        text.remove_prefix(pos + 1);
    }
    if (parts.size() < 2 || parts.size() > 3) return std::nullopt;
    Target t;
    const auto q = parse_quantity(parts[0]);
    const auto a = parse_estimator_token(parts[1]);
    if (!q || !a) return std::nullopt;
    t.quantity = *q;
    t.first = *a;
    if (parts.size() == 3) {
        const auto b = parse_estimator_token(parts[2]);
        if (!b) return std::nullopt;
        t.second = *b;
    }
    return t;
}

double sorted_quantile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

constexpr double kDropped = std::numeric_limits<double>::quiet_NaN();

std::optional<double> quantity_of(const EstimateResult& r, Quantity q) {
    switch (q) {
        case Quantity::mu0: return r.mu0;
        case Quantity::tau: return r.tau;
        case Quantity::gamma: return r.gamma;
    }
    return std::nullopt;
}

/// Distinct estimator specs referenced by the targets, and each target's indices into them.
struct Plan {
    std::vector<EstimatorSpec> specs;
    std::vector<std::pair<std::size_t, std::optional<std::size_t>>> refs;
};

Plan make_plan(const std::vector<Target>& targets) {
    Plan plan;
    const auto index_of = [&](const EstimatorSpec& s) {
        for (std::size_t i = 0; i < plan.specs.size(); ++i) {
            if (plan.specs[i] == s) return i;
        }
        plan.specs.push_back(s);
        return plan.specs.size() - 1;
    };
    for (const auto& t : targets) {
        const auto a = index_of(t.first);
        std::optional<std::size_t> b;
        if (t.second) b = index_of(*t.second);
        plan.refs.emplace_back(a, b);
    }
    return plan;
}

double evaluate(const std::vector<std::optional<EstimateResult>>& results, const Target& t,
                const std::pair<std::size_t, std::optional<std::size_t>>& ref) {
    const auto& a = results[ref.first];
    if (!a) return kDropped;
    const auto va = quantity_of(*a, t.quantity);
    if (!va) return kDropped;
    if (!ref.second) return *va;
    const auto& b = results[*ref.second];
    if (!b) return kDropped;
    const auto vb = quantity_of(*b, t.quantity);
    if (!vb) return kDropped;
    return *va - *vb;
}

std::vector<std::optional<EstimateResult>> run_all(const PanelDataset& ds, const std::vector<EstimatorSpec>& specs,
                                                   std::vector<std::string>* errors) {
    std::vector<std::optional<EstimateResult>> out(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        try {
            out[i] = estimate(ds, specs[i]);
        } catch (const EstimationError& e) {
            if (errors) (*errors)[i] = e.what();
        }
    }
    return out;
}

PanelDataset resample(const PanelDataset& ds, const std::vector<std::size_t>& treated,
                      const std::vector<std::size_t>& control, bool stratify, Engine& engine) {
    PanelDataset out;
    out.outcome_kind = ds.outcome_kind;
    out.top_code = ds.top_code;
    out.units.reserve(ds.size());
    if (stratify) {
        std::uniform_int_distribution<std::size_t> pick1(0, treated.size() - 1);
        for (std::size_t k = 0; k < treated.size(); ++k) out.units.push_back(ds.units[treated[pick1(engine)]]);
        std::uniform_int_distribution<std::size_t> pick0(0, control.size() - 1);
        for (std::size_t k = 0; k < control.size(); ++k) out.units.push_back(ds.units[control[pick0(engine)]]);
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
        for (std::size_t k = 0; k < ds.size(); ++k) out.units.push_back(ds.units[pick(engine)]);
    }
    return out;
}

struct RawOutcome {
    std::optional<IntervalEstimate> interval;
    std::string error;
    bool point_failed = false;
};

std::vector<RawOutcome> run_bootstrap(const PanelDataset& ds, const std::vector<Target>& targets,
                                      const BootstrapSpec& spec) {
    check_spec(spec);
    const auto plan = make_plan(targets);
    std::vector<RawOutcome> outcomes(targets.size());

    std::vector<std::string> point_errors(plan.specs.size());
    const auto full = run_all(ds, plan.specs, &point_errors);
    std::vector<double> points(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t) {
        points[t] = evaluate(full, targets[t], plan.refs[t]);
        if (std::isnan(points[t])) {
            outcomes[t].point_failed = true;
            std::string why = point_errors[plan.refs[t].first];
            if (why.empty() && plan.refs[t].second) why = point_errors[*plan.refs[t].second];
            if (why.empty()) why = std::string(to_string(targets[t].quantity)) + " undefined on the full sample";
            outcomes[t].error = targets[t].name() + ": " + why;
        }
    }

    std::vector<std::size_t> treated, control;
    for (std::size_t i = 0; i < ds.size(); ++i) (ds.units[i].group == 1 ? treated : control).push_back(i);

    const std::size_t B = spec.replicates;
    std::vector<double> values(B * targets.size(), kDropped);  // [b * T + t]
    const auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
            auto engine = make_engine(spec.seed, b);
            const auto sample = resample(ds, treated, control, spec.stratify_by_group, engine);
            const auto results = run_all(sample, plan.specs, nullptr);
            for (std::size_t t = 0; t < targets.size(); ++t) {
                values[b * targets.size() + t] = evaluate(results, targets[t], plan.refs[t]);
            }
        }
    };

    unsigned threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, B));
    if (threads <= 1) {
        work(0, B);
    } else {
        std::vector<std::exception_ptr> failures(threads);
        {
            std::vector<std::jthread> pool;
            const std::size_t chunk = (B + threads - 1) / threads;
            for (unsigned k = 0; k < threads; ++k) {
                const std::size_t begin = std::min(B, k * chunk);
                const std::size_t end = std::min(B, begin + chunk);
                pool.emplace_back([&, k, begin, end] {
                    try {
                        work(begin, end);
                    } catch (...) {
                        failures[k] = std::current_exception();
                    }
                });
            }
        }
        for (const auto& f : failures) {
            if (f) std::rethrow_exception(f);
        }
    }

    for (std::size_t t = 0; t < targets.size(); ++t) {
        if (outcomes[t].point_failed) continue;
        std::vector<double> draws;
        draws.reserve(B);
        for (std::size_t b = 0; b < B; ++b) {
            const double v = values[b * targets.size() + t];
            if (!std::isnan(v)) draws.push_back(v);
        }
        const std::size_t dropped = B - draws.size();
        if (2 * dropped > B) {
            outcomes[t].error = targets[t].name() + ": unstable resampling (" + std::to_string(dropped) + " of " +
                                std::to_string(B) + " replicates incomputable)";
            continue;
        }
        std::sort(draws.begin(), draws.end());
        IntervalEstimate iv;
        iv.target = targets[t].name();
        iv.point = points[t];
        iv.level = spec.level;
        iv.lower = sorted_quantile(draws, (1.0 - spec.level) / 2.0);
        iv.upper = sorted_quantile(draws, (1.0 + spec.level) / 2.0);
        iv.replicates_used = draws.size();
        iv.replicates_dropped = dropped;
        if (draws.size() > 1) {
            double mean = 0.0;
            for (double v : draws) mean += v;
            mean /= static_cast<double>(draws.size());
            double ss = 0.0;
            for (double v : draws) ss += (v - mean) * (v - mean);
            iv.std_error = std::sqrt(ss / static_cast<double>(draws.size() - 1));
        }
        iv.significant = iv.lower > 0.0 || iv.upper < 0.0;
        outcomes[t].interval = iv;
    }
    return outcomes;
}

}  // namespace

std::vector<IntervalEstimate> bootstrap_estimates(const PanelDataset& ds, const std::vector<Target>& targets,
                                                  const BootstrapSpec& spec) {
    const auto outcomes = run_bootstrap(ds, targets, spec);
    std::vector<IntervalEstimate> out;
    out.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        if (o.point_failed) throw EstimationError(o.error);
        if (!o.interval) throw InferenceError(o.error);
        out.push_back(*o.interval);
    }
    return out;
}

std::vector<EstimatorSpec> applicable_estimators(const PanelDataset& ds, bool stratify) {
    std::vector<EstimatorSpec> specs = {
        {Method::did_moment},
        {Method::ipw_did},
        {Method::ldv_control_reg},
        {Method::ldv_control_reg_quadratic},
        {Method::ldv_pooled_reg},
    };
    if (ds.is_discrete()) {
        specs.push_back({Method::ldv_nonparametric});
        specs.push_back({Method::ipw_ldv, Propensity::saturated_discrete});
    } else {
        specs.push_back({Method::ipw_ldv, Propensity::logistic});
    }
    for (auto& s : specs) s.stratified = stratify;
    return specs;
}

ComparisonReport compare_estimators(const PanelDataset& ds, const std::optional<BootstrapSpec>& spec,
                                    const CompareOptions& options) {
    ComparisonReport report;
    report.n = ds.size();
    report.outcome_kind = ds.outcome_kind;
    report.top_code = ds.top_code;
    if (ds.size() < kSmallSampleThreshold) {
        report.warnings.push_back("small sample: n = " + std::to_string(ds.size()) + " < " +
                                  std::to_string(kSmallSampleThreshold) + "; estimates and intervals are fragile");
    }
    if (ds.top_code) {
        report.warnings.push_back("contingency levels at or above " + std::to_string(*ds.top_code) +
                                  " were materialized as " + std::to_string(*ds.top_code) +
                                  "; means involving the top level are truncated");
    }

    const auto specs = applicable_estimators(ds, options.stratify);
    std::vector<std::string> errors(specs.size());
    const auto results = run_all(ds, specs, &errors);
    for (std::size_t i = 0; i < specs.size(); ++i) report.estimates.push_back({specs[i], results[i], errors[i]});

    try {
        report.stationarity = check_stationarity(ds, {options.quadratic_stationarity});
    } catch (const EstimationError& e) {
        report.warnings.push_back(std::string("stationarity check unavailable: ") + e.what());
    }
    try {
        report.monotonicity = check_monotonicity(ds, options.epsilon);
    } catch (const EstimationError& e) {
        report.warnings.push_back(std::string("monotonicity check unavailable: ") + e.what());
    }

    try {
        const auto did = did_moment(ds);
        const auto ldv = estimate(ds, default_ldv_spec(ds));
        std::optional<Lemma1Result> lemma;
        try {
            lemma = lemma1_gap(ds);
        } catch (const EstimationError& e) {
            report.warnings.push_back(std::string("gap decomposition unavailable: ") + e.what());
        }
        if (report.stationarity && report.monotonicity) {
            report.bracket = predict_bracket(*report.stationarity, *report.monotonicity, did, ldv, lemma);
        } else {
            report.bracket_error = "condition checks unavailable";
        }
    } catch (const EstimationError& e) {
        report.bracket_error = e.what();
    }

    if (spec) {
        check_spec(*spec);
        report.bootstrap = spec;
        std::vector<Target> targets;
        std::vector<std::size_t> available;
        for (std::size_t i = 0; i < specs.size(); ++i) {
            if (results[i]) available.push_back(i);
        }
        for (const auto i : available) targets.push_back({Quantity::tau, specs[i], std::nullopt});
        for (std::size_t x = 0; x < available.size(); ++x) {
            for (std::size_t y = x + 1; y < available.size(); ++y) {
                const auto& a = specs[available[x]];
                const auto& b = specs[available[y]];
                targets.push_back({Quantity::tau, a, b});
                if (results[available[x]]->gamma && results[available[y]]->gamma) {
                    targets.push_back({Quantity::gamma, a, b});
                }
            }
        }
        const auto outcomes = run_bootstrap(ds, targets, *spec);
        for (std::size_t t = 0; t < targets.size(); ++t) {
            report.intervals.push_back({targets[t].name(), outcomes[t].interval, outcomes[t].error});
        }
    }
    return report;
}

}  // namespace didldv
