#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "didldv/data.hpp"
#include "didldv/estimators.hpp"

namespace didldv {

enum class StationarityMethod { regression_slope, discrete_differences, binary_auto };
enum class Dominance { a, b, none };
enum class BracketOrder { did_ge_ldv, did_le_ldv, indeterminate };

[[nodiscard]] std::string_view to_string(StationarityMethod m) noexcept;
[[nodiscard]] std::string_view to_string(Dominance d) noexcept;
[[nodiscard]] std::string_view to_string(BracketOrder o) noexcept;

/// Slope of E(y_post | control, y_pre) between two locations (equal for a regression slope).
struct SlopeStatistic {
    double from = 0.0;
    double to = 0.0;
    double slope = 0.0;
};

struct ConditionalMean {
    double level = 0.0;
    double mean = 0.0;
    std::size_t n_control = 0;
};

/**
 * @brief Empirical check that E(y_post | control, y_pre = y) grows slower than y.
 *
 * Binary outcomes are satisfied automatically (conditional means are
 * bounded in [0,1]). Count outcomes use slopes between successive
 * control-supported levels. Continuous outcomes use the control-only OLS
 * slope, plus the quadratic-fit derivative at the ends of the control
 * support when requested.
 */
struct StationarityReport {
    StationarityMethod method = StationarityMethod::regression_slope;
    std::vector<SlopeStatistic> statistics;
    std::vector<ConditionalMean> conditional_means;  ///< discrete outcomes only
    bool satisfied = false;
    double margin = 0.0;  ///< 1 - max slope
    std::vector<std::string> warnings;
    std::optional<int> top_code;  ///< set when means are computed on top-coded outcomes
};

struct StationarityOptions {
    bool quadratic = false;
};

[[nodiscard]] StationarityReport check_stationarity(const PanelDataset& ds, StationarityOptions options = {});

/**
 * @brief Pointwise comparison of the groups' empirical y_pre CDFs.
 *
 * direction = a when cdf_treated >= cdf_control - epsilon everywhere (the
 * treated group has stochastically smaller lagged outcomes), b for the
 * mirror image, none otherwise. When both hold the report says a and sets
 * degenerate.
 */
struct MonotonicityReport {
    std::vector<double> points;
    std::vector<double> cdf_treated;
    std::vector<double> cdf_control;
    Dominance direction = Dominance::none;
    double max_violation = 0.0;
    bool degenerate = false;
    double epsilon = 0.0;
};

[[nodiscard]] MonotonicityReport check_monotonicity(const PanelDataset& ds, double epsilon = 0.0);

struct DeltaPoint {
    double y = 0.0;
    double delta = 0.0;
    double p_treated = 0.0;
    double p_control = 0.0;
};

/// Delta(y) = E(y_post | control, y_pre = y) - y, and the gap
/// sum Delta dF_treated - sum Delta dF_control.
struct Lemma1Result {
    bool discrete = true;
    std::vector<DeltaPoint> table;  ///< discrete outcomes
    double fitted_intercept = 0.0;  ///< continuous: Delta(y) = intercept + slope * y
    double fitted_slope = 0.0;
    double gap = 0.0;
};

/// @throws OverlapError on discrete data whose treated levels lack controls
[[nodiscard]] Lemma1Result lemma1_gap(const PanelDataset& ds);

struct ObservedOrder {
    double mu0_did = 0.0;
    double mu0_ldv = 0.0;
    double tau_did = 0.0;
    double tau_ldv = 0.0;
    std::optional<double> gamma_did;
    std::optional<double> gamma_ldv;
    BracketOrder tau_order = BracketOrder::indeterminate;
    std::optional<BracketOrder> gamma_order;
};

struct BracketReport {
    std::string did_method;
    std::string ldv_method;
    std::optional<Lemma1Result> lemma;
    BracketOrder predicted = BracketOrder::indeterminate;
    std::string rationale;
    ObservedOrder observed;
    std::optional<bool> agreement;  ///< absent when predicted is indeterminate
};

/// Relative slack used when comparing observed estimates for ties.
inline constexpr double kOrderTolerance = 1e-12;

/**
 * @brief Maps the condition checks to a predicted ordering and compares with the estimates.
 *
 * Stationarity with direction a predicts tau_DID >= tau_LDV (and likewise
 * for gamma); with direction b the reverse. Anything else is indeterminate
 * and only the observed ordering is reported.
 */
[[nodiscard]] BracketReport predict_bracket(const StationarityReport& st, const MonotonicityReport& mono,
                                            const EstimateResult& did, const EstimateResult& ldv,
                                            std::optional<Lemma1Result> lemma = std::nullopt);

/// The LDV estimator whose sample version the bracket reasons about:
/// ldv_nonparametric for discrete outcomes, ldv_control_reg otherwise.
[[nodiscard]] EstimatorSpec default_ldv_spec(const PanelDataset& ds) noexcept;

}  // namespace didldv
