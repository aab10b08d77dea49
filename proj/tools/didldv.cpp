// didldv: command-line frontend for the DID / LDV bracketing toolkit.
//
// Exit codes: 0 success, 2 input or validation error, 3 estimation or
// inference error, 64 usage error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "didldv/data.hpp"
#include "didldv/diagnostics.hpp"
#include "didldv/errors.hpp"
#include "didldv/estimators.hpp"
#include "didldv/inference.hpp"
#include "didldv/report.hpp"
#include "didldv/simulate.hpp"

namespace {

using namespace didldv;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitEstimation = 3;
constexpr int kExitUsage = 64;
constexpr std::uint64_t kFallbackSeed = 2019;

struct InputOptions {
    std::string input;
    std::string layout = "wide";
    std::string outcome = "continuous";
    std::optional<int> top_code;
};

struct OutputOptions {
    std::string format = "json";
    std::string output;
    std::string plots;
    bool timestamp = false;
};

struct BootOptions {
    std::size_t replicates = 2000;
    std::uint64_t seed = kFallbackSeed;
    double level = 0.95;
    bool no_stratify = false;
    unsigned threads = 0;
};

struct Loaded {
    PanelDataset ds;
    std::string digest;
};

std::uint64_t default_seed() {
    if (const char* env = std::getenv("DIDLDV_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            std::cerr << "warning: ignoring unparsable DIDLDV_SEED='" << env << "'\n";
        }
    }
    return kFallbackSeed;
}

std::optional<std::string> report_timestamp(bool requested) {
    std::time_t t = 0;
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
        t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
    } else if (requested) {
        t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    } else {
        return std::nullopt;
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
}

Loaded load(const InputOptions& in) {
    const auto layout = parse_layout(in.layout);
    const auto kind = parse_outcome_kind(in.outcome);
    std::ifstream file(in.input, std::ios::binary);
    if (!file) throw ValidationError("cannot open input file '" + in.input + "'");
    std::ostringstream bytes;
    bytes << file.rdbuf();
    const std::string content = bytes.str();
    std::istringstream stream(content);
    return {load_panel(stream, *layout, *kind, in.top_code), sha256_hex(content)};
}

void add_input_options(CLI::App* cmd, InputOptions& in) {
    cmd->add_option("--input,-i", in.input, "Input CSV file")->required();
    cmd->add_option("--layout", in.layout, "wide | long | contingency")
        ->check(CLI::IsMember({"wide", "long", "contingency"}))
        ->capture_default_str();
    cmd->add_option("--outcome", in.outcome, "continuous | count | binary")
        ->check(CLI::IsMember({"continuous", "count", "binary"}))
        ->capture_default_str();
    cmd->add_option("--top-code", in.top_code, "Contingency level K meaning 'K or more'")->check(CLI::NonNegativeNumber);
}

void add_output_options(CLI::App* cmd, OutputOptions& out, bool plots) {
    cmd->add_option("--format", out.format, "json | markdown")
        ->check(CLI::IsMember({"json", "markdown"}))
        ->capture_default_str();
    cmd->add_option("--output,-o", out.output, "Write the report to a file instead of stdout");
    if (plots) cmd->add_option("--plots", out.plots, "Directory for plot-point CSV files");
    cmd->add_flag("--timestamp", out.timestamp, "Stamp the report with the current UTC time");
}

void add_boot_options(CLI::App* cmd, BootOptions& b) {
    cmd->add_option("--replicates", b.replicates, "Bootstrap replicates")
        ->check(CLI::Range(std::size_t{kMinIntervalReplicates}, std::size_t{100000000}))
        ->capture_default_str();
    cmd->add_option("--seed", b.seed, "Seed (default: $DIDLDV_SEED or 2019)");
    cmd->add_option("--level", b.level, "Interval level in (0,1)")
        ->check(CLI::Range(1e-9, 1.0 - 1e-9))
        ->capture_default_str();
    cmd->add_flag("--no-stratify", b.no_stratify, "Resample units ignoring group");
    cmd->add_option("--threads", b.threads, "Worker threads (0 = all cores)");
}

Json input_flags(const InputOptions& in) {
    Json f{{"input", in.input}, {"layout", in.layout}, {"outcome", in.outcome}};
    f["top_code"] = in.top_code ? Json(*in.top_code) : Json(nullptr);
    return f;
}

BootstrapSpec to_spec(const BootOptions& b) {
    return {b.replicates, b.seed, b.level, !b.no_stratify, b.threads};
}

void emit(const Envelope& envelope, const OutputOptions& out) {
    const Json json = to_json(envelope);
    const std::string text = out.format == "markdown" ? render_markdown(json) : json.dump(2) + "\n";
    if (out.output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream file(out.output, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write '" + out.output + "'");
    file << text;
}

void write_plots(const std::string& dir, const PanelDataset& ds, const MonotonicityReport& mono) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    std::ofstream cdf(std::filesystem::path(dir) / "cdf.csv");
    write_cdf_csv(cdf, mono);
    std::ofstream fit(std::filesystem::path(dir) / "fit.csv");
    write_fit_csv(fit, ds);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Difference-in-differences vs lagged-dependent-variable adjustment: estimates, "
                 "bracketing diagnostics, bootstrap and Monte Carlo"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version()));

    InputOptions in;
    OutputOptions out;
    BootOptions boot;
    boot.seed = default_seed();

    // estimate
    auto* estimate_cmd = app.add_subcommand("estimate", "Run one or more estimators");
    std::vector<std::string> methods;
    std::string propensity;
    bool stratify = false;
    add_input_options(estimate_cmd, in);
    add_output_options(estimate_cmd, out, false);
    estimate_cmd
        ->add_option("--method,-m", methods,
                     "did | ldv-control | ldv-quadratic | ldv-pooled | ldv-np | ipw-did | ipw-ldv (repeatable; "
                     "default: all applicable)")
        ->check(CLI::IsMember({"did", "ldv-control", "ldv-quadratic", "ldv-pooled", "ldv-np", "ipw-did", "ipw-ldv"}));
    estimate_cmd->add_option("--propensity", propensity, "saturated | logistic (ipw-ldv)")
        ->check(CLI::IsMember({"saturated", "logistic"}));
    estimate_cmd->add_flag("--stratified", stratify, "Aggregate over the stratum column");

    // diagnose
    auto* diagnose_cmd = app.add_subcommand("diagnose", "Check stationarity and stochastic monotonicity");
    double epsilon = 0.0;
    bool quadratic = false;
    add_input_options(diagnose_cmd, in);
    add_output_options(diagnose_cmd, out, true);
    diagnose_cmd->add_option("--epsilon", epsilon, "Slack for CDF dominance")->check(CLI::NonNegativeNumber);
    diagnose_cmd->add_flag("--quadratic", quadratic, "Also check the quadratic-fit derivative (continuous)");

    // bracket
    auto* bracket_cmd = app.add_subcommand("bracket", "All estimators, diagnostics and the predicted ordering");
    bool with_bootstrap = false;
    add_input_options(bracket_cmd, in);
    add_output_options(bracket_cmd, out, true);
    add_boot_options(bracket_cmd, boot);
    bracket_cmd->add_flag("--bootstrap", with_bootstrap, "Add paired bootstrap intervals");
    bracket_cmd->add_option("--epsilon", epsilon, "Slack for CDF dominance")->check(CLI::NonNegativeNumber);
    bracket_cmd->add_flag("--quadratic", quadratic, "Also check the quadratic-fit derivative (continuous)");
    bracket_cmd->add_flag("--stratified", stratify, "Aggregate estimators over the stratum column");

    // bootstrap
    auto* bootstrap_cmd = app.add_subcommand("bootstrap", "Percentile bootstrap intervals");
    std::vector<std::string> target_texts;
    add_input_options(bootstrap_cmd, in);
    add_output_options(bootstrap_cmd, out, false);
    add_boot_options(bootstrap_cmd, boot);
    bootstrap_cmd->add_option("--target,-t", target_texts,
                              "quantity:method[:method], e.g. tau:did or gamma:did:ldv-np (repeatable)");

    // simulate
    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo study under a synthetic DGP");
    DgpSpec dgp;
    std::string family = "ignorability_ar";
    std::size_t reps = 500;
    std::string replicates_csv;
    unsigned sim_threads = 0;
    add_output_options(simulate_cmd, out, false);
    simulate_cmd->add_option("--family", family, "ignorability_ar | parallel_trends_fe")
        ->check(CLI::IsMember({"ignorability_ar", "parallel_trends_fe"}))
        ->capture_default_str();
    simulate_cmd->add_option("--n", dgp.n, "Units per sample")->check(CLI::Range(std::size_t{4}, std::size_t{1} << 40))
        ->capture_default_str();
    simulate_cmd->add_option("--tau", dgp.tau_true, "True effect")->capture_default_str();
    simulate_cmd->add_option("--beta", dgp.beta, "Lag coefficient (ignorability_ar)")->capture_default_str();
    simulate_cmd->add_option("--selection", dgp.selection, "Logistic selection slope")->capture_default_str();
    simulate_cmd->add_option("--noise-sd", dgp.noise_sd, "Noise SD")->check(CLI::PositiveNumber)->capture_default_str();
    simulate_cmd->add_option("--baseline-mean", dgp.baseline_mean)->capture_default_str();
    simulate_cmd->add_option("--baseline-sd", dgp.baseline_sd)->check(CLI::PositiveNumber)->capture_default_str();
    simulate_cmd->add_option("--trend", dgp.trend, "Time effect (parallel_trends_fe)")->capture_default_str();
    simulate_cmd->add_option("--reps", reps, "Replications")->check(CLI::PositiveNumber)->capture_default_str();
    simulate_cmd->add_option("--seed", boot.seed, "Seed (default: $DIDLDV_SEED or 2019)");
    simulate_cmd->add_option("--threads", sim_threads, "Worker threads (0 = all cores)");
    simulate_cmd->add_option("--replicates-csv", replicates_csv, "Write per-replicate results to this CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kExitUsage;
    }

    try {
        Envelope envelope;
        envelope.timestamp = report_timestamp(out.timestamp);
        Json flags_out{{"format", out.format}};

        if (*estimate_cmd) {
            auto loaded = load(in);
            envelope.command = "estimate";
            envelope.flags = input_flags(in);
            envelope.flags["methods"] = methods;
            envelope.flags["propensity"] = propensity.empty() ? Json(nullptr) : Json(propensity);
            envelope.flags["stratified"] = stratify;
            envelope.input_digest = loaded.digest;
            const auto& ds = loaded.ds;

            std::vector<EstimatorSpec> specs;
            const bool explicit_methods = !methods.empty();
            if (explicit_methods) {
                for (const auto& m : methods) {
                    EstimatorSpec s{*parse_method(m)};
                    if (!propensity.empty()) {
                        s.propensity = *parse_propensity(propensity);
                    } else if (!ds.is_discrete()) {
                        s.propensity = Propensity::logistic;
                    }
                    s.stratified = stratify;
                    specs.push_back(s);
                }
            } else {
                specs = applicable_estimators(ds, stratify);
            }
            Json estimates = Json::array();
            for (const auto& s : specs) {
                try {
                    auto item = to_json(estimate(ds, s));
                    item["available"] = true;
                    estimates.push_back(std::move(item));
                } catch (const EstimationError& e) {
                    if (explicit_methods) throw;
                    estimates.push_back({{"method", s.name()}, {"available", false}, {"error", e.what()}});
                }
            }
            envelope.payload = {{"dataset", describe(ds)}, {"estimates", std::move(estimates)}};
            envelope.flags.update(flags_out);
            emit(envelope, out);
            return kExitOk;
        }

        if (*diagnose_cmd) {
            auto loaded = load(in);
            envelope.command = "diagnose";
            envelope.flags = input_flags(in);
            envelope.flags["epsilon"] = epsilon;
            envelope.flags["quadratic"] = quadratic;
            envelope.input_digest = loaded.digest;
            const auto& ds = loaded.ds;
            const auto st = check_stationarity(ds, {quadratic});
            const auto mono = check_monotonicity(ds, epsilon);
            envelope.payload = {{"dataset", describe(ds)}, {"stationarity", to_json(st)}, {"monotonicity", to_json(mono)}};
            try {
                envelope.payload["lemma1"] = to_json(lemma1_gap(ds));
            } catch (const EstimationError& e) {
                envelope.payload["lemma1"] = nullptr;
                envelope.payload["lemma1_error"] = e.what();
            }
            write_plots(out.plots, ds, mono);
            envelope.flags.update(flags_out);
            emit(envelope, out);
            return kExitOk;
        }

        if (*bracket_cmd) {
            auto loaded = load(in);
            envelope.command = "bracket";
            envelope.flags = input_flags(in);
            envelope.flags["epsilon"] = epsilon;
            envelope.flags["quadratic"] = quadratic;
            envelope.flags["stratified"] = stratify;
            envelope.flags["bootstrap"] = with_bootstrap;
            envelope.input_digest = loaded.digest;
            const auto& ds = loaded.ds;
            std::optional<BootstrapSpec> spec;
            if (with_bootstrap) {
                spec = to_spec(boot);
                envelope.flags["bootstrap_spec"] = to_json(*spec);
            }
            const auto report = compare_estimators(ds, spec, {epsilon, quadratic, stratify});
            envelope.payload = to_json(report);
            if (report.monotonicity) write_plots(out.plots, ds, *report.monotonicity);
            envelope.flags.update(flags_out);
            emit(envelope, out);
            if (!report.bracket) {
                std::cerr << "error: bracket unavailable: " << report.bracket_error << '\n';
                return kExitEstimation;
            }
            return kExitOk;
        }

        if (*bootstrap_cmd) {
            auto loaded = load(in);
            envelope.command = "bootstrap";
            envelope.flags = input_flags(in);
            envelope.input_digest = loaded.digest;
            const auto& ds = loaded.ds;
            std::vector<Target> targets;
            for (const auto& text : target_texts) {
                const auto t = parse_target(text);
                if (!t) {
                    std::cerr << "error: unrecognized target '" << text << "'\n" << bootstrap_cmd->help();
                    return kExitUsage;
                }
                targets.push_back(*t);
            }
            if (targets.empty()) {
                const auto ldv = default_ldv_spec(ds);
                const EstimatorSpec did{Method::did_moment};
                targets = {{Quantity::tau, did, std::nullopt},
                           {Quantity::tau, ldv, std::nullopt},
                           {Quantity::tau, did, ldv},
                           {Quantity::gamma, did, ldv}};
            }
            Json names = Json::array();
            for (const auto& t : targets) names.push_back(t.name());
            const auto spec = to_spec(boot);
            envelope.flags["targets"] = std::move(names);
            envelope.flags["bootstrap_spec"] = to_json(spec);
            Json intervals = Json::array();
            for (const auto& iv : bootstrap_estimates(ds, targets, spec)) intervals.push_back(to_json(iv));
            envelope.payload = {{"dataset", describe(ds)}, {"intervals", std::move(intervals)}};
            envelope.flags.update(flags_out);
            emit(envelope, out);
            return kExitOk;
        }

        if (*simulate_cmd) {
            dgp.family = *parse_family(family);
            envelope.command = "simulate";
            envelope.flags = {{"reps", reps}, {"seed", boot.seed}, {"dgp", to_json(dgp)}};
            const auto summary = monte_carlo(dgp, reps, boot.seed, sim_threads);
            envelope.payload = {{"monte_carlo", to_json(summary)}};
            if (!replicates_csv.empty()) {
                std::ofstream csv(replicates_csv);
                if (!csv) throw std::runtime_error("cannot write '" + replicates_csv + "'");
                write_replicates_csv(csv, summary);
            }
            envelope.flags.update(flags_out);
            emit(envelope, out);
            return kExitOk;
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const InferenceError& e) {
        std::cerr << "inference error: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitUsage;
}
