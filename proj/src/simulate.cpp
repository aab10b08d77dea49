#include "didldv/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include "didldv/diagnostics.hpp"
#include "didldv/errors.hpp"
#include "didldv/estimators.hpp"
#include "didldv/rng.hpp"

namespace didldv {

std::string_view to_string(DgpFamily f) noexcept {
    return f == DgpFamily::ignorability_ar ? "ignorability_ar" : "parallel_trends_fe";
}

std::optional<DgpFamily> parse_family(std::string_view text) noexcept {
    if (text == "ignorability_ar" || text == "ignorability") return DgpFamily::ignorability_ar;
    if (text == "parallel_trends_fe" || text == "parallel_trends") return DgpFamily::parallel_trends_fe;
    return std::nullopt;
}

void check_spec(const DgpSpec& spec) {
    if (spec.n < 4) throw std::invalid_argument("simulation needs n >= 4");
    if (!(spec.noise_sd > 0.0)) throw std::invalid_argument("noise_sd must be positive");
    if (!(spec.baseline_sd > 0.0)) throw std::invalid_argument("baseline_sd must be positive");
}

PanelDataset generate(const DgpSpec& spec, std::uint64_t seed) {
    check_spec(spec);
    Engine engine(mix64(seed));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    PanelDataset ds;
    ds.outcome_kind = OutcomeKind::continuous;
    ds.units.resize(spec.n);
    const double intercept = (1.0 - spec.beta) * spec.baseline_mean;
    while (true) {
        std::size_t treated = 0;
        for (std::size_t i = 0; i < spec.n; ++i) {
            auto& u = ds.units[i];
            u.unit_id = std::to_string(i + 1);
            const double z = normal(engine);
            const double p = 1.0 / (1.0 + std::exp(-spec.selection * z));
            u.group = uniform(engine) < p ? 1 : 0;
            treated += static_cast<std::size_t>(u.group);
            if (spec.family == DgpFamily::ignorability_ar) {
                u.y_pre = spec.baseline_mean + spec.baseline_sd * z;
                u.y_post = intercept + spec.beta * u.y_pre + spec.tau_true * u.group + spec.noise_sd * normal(engine);
            } else {
                const double fixed_effect = spec.baseline_mean + spec.baseline_sd * z;
                u.y_pre = fixed_effect + spec.noise_sd * normal(engine);
                u.y_post = fixed_effect + spec.trend + spec.tau_true * u.group + spec.noise_sd * normal(engine);
            }
        }
        if (treated > 0 && treated < spec.n) return ds;
    }
}

const EstimatorSummary& MonteCarloSummary::estimator(std::string_view name) const {
    for (const auto& e : estimators) {
        if (e.name == name) return e;
    }
    throw std::out_of_range("no estimator summary named '" + std::string(name) + "'");
}

namespace {

ReplicateRecord run_replicate(const DgpSpec& spec, std::uint64_t base_seed, std::size_t index) {
    ReplicateRecord rec;
    rec.index = index;
    rec.seed = derive_seed(base_seed, index);
    try {
        const auto ds = generate(spec, rec.seed);
        rec.n_treated = ds.n_treated();
        const auto did = did_moment(ds);
        const auto ldv = ldv_regression(ds, RegressionVariant::control_only);
        const auto pooled = ldv_regression(ds, RegressionVariant::pooled);
        const auto st = check_stationarity(ds);
        const auto mono = check_monotonicity(ds);
        rec.tau_did = did.tau;
        rec.tau_ldv = ldv.tau;
        rec.tau_ldv_pooled = pooled.tau;
        rec.beta_hat = *ldv.coefficient("y_pre");
        rec.stationary = st.satisfied;
        rec.direction = mono.direction == Dominance::a ? 'a' : mono.direction == Dominance::b ? 'b' : 'n';
        rec.ok = true;
    } catch (const EstimationError& e) {
        rec.error = e.what();
    }
    return rec;
}

EstimatorSummary summarize(std::string name, const std::vector<double>& values, double truth) {
    EstimatorSummary s;
    s.name = std::move(name);
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    s.bias = s.mean - truth;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        s.mc_se = s.sd / std::sqrt(static_cast<double>(values.size()));
    }
    return s;
}

}  // namespace

MonteCarloSummary monte_carlo(const DgpSpec& spec, std::size_t replications, std::uint64_t seed, unsigned threads) {
    check_spec(spec);
    if (replications < 1) throw std::invalid_argument("monte_carlo needs at least one replication");

    MonteCarloSummary summary;
    summary.spec = spec;
    summary.seed = seed;
    summary.replications = replications;
    summary.records.resize(replications);

    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, replications));
    std::vector<std::exception_ptr> failures(workers);
    {
        std::vector<std::jthread> pool;
        for (unsigned k = 0; k < workers; ++k) {
            pool.emplace_back([&, k] {
                try {
                    for (std::size_t r = k; r < replications; r += workers) {
                        summary.records[r] = run_replicate(spec, seed, r);
                    }
                } catch (...) {
                    failures[k] = std::current_exception();
                }
            });
        }
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    std::vector<double> did, ldv, pooled;
    std::size_t ge = 0, stationary = 0, dir_a = 0, dir_b = 0;
    for (const auto& rec : summary.records) {
        if (!rec.ok) {
            ++summary.failed;
            continue;
        }
        ++summary.completed;
        did.push_back(rec.tau_did);
        ldv.push_back(rec.tau_ldv);
        pooled.push_back(rec.tau_ldv_pooled);
        if (rec.tau_did >= rec.tau_ldv) ++ge;
        if (rec.stationary) ++stationary;
        if (rec.direction == 'a') ++dir_a;
        if (rec.direction == 'b') ++dir_b;
        if (rec.stationary && rec.direction != 'n') {
            ++summary.premises_met;
            const bool agree = rec.direction == 'a' ? rec.tau_did >= rec.tau_ldv : rec.tau_did <= rec.tau_ldv;
            if (agree) ++summary.premises_agree;
        }
    }
    summary.estimators.push_back(summarize("did_moment", did, spec.tau_true));
    summary.estimators.push_back(summarize("ldv_control_reg", ldv, spec.tau_true));
    summary.estimators.push_back(summarize("ldv_pooled_reg", pooled, spec.tau_true));
    if (summary.completed > 0) {
        const double c = static_cast<double>(summary.completed);
        summary.freq_did_ge_ldv = static_cast<double>(ge) / c;
        summary.stationarity_rate = static_cast<double>(stationary) / c;
        summary.direction_a_rate = static_cast<double>(dir_a) / c;
        summary.direction_b_rate = static_cast<double>(dir_b) / c;
    }
    return summary;
}

void write_replicates_csv(std::ostream& out, const MonteCarloSummary& summary) {
    out << "index,seed,ok,n_treated,tau_did,tau_ldv,tau_ldv_pooled,beta_hat,stationary,direction,error\n";
    char buf[512];
    for (const auto& r : summary.records) {
        std::snprintf(buf, sizeof buf, "%zu,%llu,%d,%zu,%.17g,%.17g,%.17g,%.17g,%d,%c,", r.index,
                      static_cast<unsigned long long>(r.seed), r.ok ? 1 : 0, r.n_treated, r.tau_did, r.tau_ldv,
                      r.tau_ldv_pooled, r.beta_hat, r.stationary ? 1 : 0, r.direction);
        out << buf;
        if (!r.error.empty()) {
            std::string quoted = "\"";
            for (char c : r.error) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
            out << quoted << '"';
        }
        out << '\n';
    }
}

}  // namespace didldv
