#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "didldv/data.hpp"
#include "didldv/diagnostics.hpp"
#include "didldv/estimators.hpp"

namespace didldv {

struct BootstrapSpec {
    std::size_t replicates = 2000;
    std::uint64_t seed = 0;
    double level = 0.95;
    bool stratify_by_group = true;
    unsigned threads = 0;  ///< 0 = hardware concurrency; never changes the output
};

inline constexpr std::size_t kMinIntervalReplicates = 100;

/// @throws InferenceError when replicates < kMinIntervalReplicates or level is outside (0,1)
void check_spec(const BootstrapSpec& spec);

enum class Quantity { mu0, tau, gamma };

[[nodiscard]] std::string_view to_string(Quantity q) noexcept;
[[nodiscard]] std::optional<Quantity> parse_quantity(std::string_view text) noexcept;

/// A bootstrap target: quantity[first], or quantity[first] - quantity[second] when second is set.
struct Target {
    Quantity quantity = Quantity::tau;
    EstimatorSpec first;
    std::optional<EstimatorSpec> second;

    [[nodiscard]] std::string name() const;
};

/// Parses "tau:did" or "gamma:did:ldv-np" (difference first - second).
[[nodiscard]] std::optional<Target> parse_target(std::string_view text);

struct IntervalEstimate {
    std::string target;
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double std_error = 0.0;
    bool significant = false;  ///< interval excludes 0
    double level = 0.95;
    std::size_t replicates_used = 0;
    std::size_t replicates_dropped = 0;
};

/**
 * @brief Percentile bootstrap over units.
 *
 * Units are resampled with replacement (within group when
 * stratify_by_group). Replicate b draws from an engine seeded by
 * (spec.seed, b), so output is independent of thread count. Paired
 * difference targets recompute both estimators on the same replicate.
 * Replicates where a target cannot be computed are dropped for that target.
 *
 * @throws InferenceError when more than half of a target's replicates are dropped
 * @throws EstimationError when a target cannot be computed on the full sample
 */
[[nodiscard]] std::vector<IntervalEstimate> bootstrap_estimates(const PanelDataset& ds,
                                                                const std::vector<Target>& targets,
                                                                const BootstrapSpec& spec);

/// Type-7 (linear interpolation) sample quantile of sorted data.
[[nodiscard]] double sorted_quantile(const std::vector<double>& sorted, double p);

struct EstimatorOutcome {
    EstimatorSpec spec;
    std::optional<EstimateResult> result;
    std::string error;  ///< set when result is absent
};

struct TargetOutcome {
    std::string target;
    std::optional<IntervalEstimate> interval;
    std::string error;
};

struct ComparisonReport {
    std::size_t n = 0;
    OutcomeKind outcome_kind = OutcomeKind::continuous;
    std::optional<int> top_code;
    std::vector<EstimatorOutcome> estimates;
    std::optional<StationarityReport> stationarity;
    std::optional<MonotonicityReport> monotonicity;
    std::optional<BracketReport> bracket;
    std::string bracket_error;
    std::optional<BootstrapSpec> bootstrap;
    std::vector<TargetOutcome> intervals;
    std::vector<std::string> warnings;
};

inline constexpr std::size_t kSmallSampleThreshold = 30;

/// Estimators applicable to the dataset's outcome kind.
[[nodiscard]] std::vector<EstimatorSpec> applicable_estimators(const PanelDataset& ds, bool stratify = false);

struct CompareOptions {
    double epsilon = 0.0;
    bool quadratic_stationarity = false;
    bool stratify = false;
};

/**
 * @brief Runs every applicable estimator, the diagnostics and the bracket
 * prediction; with a bootstrap spec, adds paired-difference intervals for
 * tau and gamma over all pairs of available estimators.
 *
 * Individual failures are recorded in the report rather than thrown.
 */
[[nodiscard]] ComparisonReport compare_estimators(const PanelDataset& ds, const std::optional<BootstrapSpec>& spec,
                                                  const CompareOptions& options = {});

}  // namespace didldv
