#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "didldv/data.hpp"
#include "didldv/least_squares.hpp"

namespace didldv {

enum class Method {
    did_moment,
    ldv_control_reg,
    ldv_control_reg_quadratic,
    ldv_pooled_reg,
    ldv_nonparametric,
    ipw_did,
    ipw_ldv,
};

enum class Propensity { saturated_discrete, logistic };

enum class RegressionVariant { control_only, control_only_quadratic, pooled };

[[nodiscard]] std::string_view to_string(Method m) noexcept;
[[nodiscard]] std::string_view to_string(Propensity p) noexcept;
/// Accepts canonical names ("ldv_control_reg") and CLI aliases ("ldv-control").
[[nodiscard]] std::optional<Method> parse_method(std::string_view text) noexcept;
[[nodiscard]] std::optional<Propensity> parse_propensity(std::string_view text) noexcept;

/// True for the estimators identified under ignorability on the lagged outcome.
[[nodiscard]] constexpr bool is_ldv(Method m) noexcept {
    return m != Method::did_moment && m != Method::ipw_did;
}

/// Which estimator to run. propensity is only read by ipw_ldv.
struct EstimatorSpec {
    Method method = Method::did_moment;
    Propensity propensity = Propensity::saturated_discrete;
    bool stratified = false;

    [[nodiscard]] std::string name() const;
    friend bool operator==(const EstimatorSpec&, const EstimatorSpec&) = default;
};

using Coefficient = std::pair<std::string, double>;

/**
 * @brief Counterfactual mean and effect estimates from one estimator run.
 *
 * tau is always mu1 - mu0; gamma = mu1 / mu0 is present only when mu0 > 0.
 */
struct EstimateResult {
    EstimatorSpec spec;
    double mu1 = 0.0;
    double mu0 = 0.0;
    double tau = 0.0;
    std::optional<double> gamma;
    std::vector<Coefficient> coefficients;
    std::size_t n_treated = 0;
    std::size_t n_control = 0;
    std::vector<std::string> warnings;

    [[nodiscard]] Method method() const noexcept { return spec.method; }
    [[nodiscard]] std::optional<double> coefficient(std::string_view name) const;
};

/// Builds a result with tau and gamma derived from (mu1, mu0).
[[nodiscard]] EstimateResult make_result(EstimatorSpec spec, double mu1, double mu0, std::size_t n_treated,
                                         std::size_t n_control);

/// (Ybar_1,post - Ybar_1,pre) - (Ybar_0,post - Ybar_0,pre); mu0 = Ybar_1,pre + Ybar_0,post - Ybar_0,pre.
[[nodiscard]] EstimateResult did_moment(const PanelDataset& ds);

/**
 * @brief Regression adjustment for the lagged outcome.
 *
 * control_only fits y_post ~ 1 + y_pre on controls and averages the fitted
 * curve over treated y_pre (quadratic adds y_pre^2). pooled fits
 * y_post ~ 1 + group + y_pre on all units and takes the group coefficient.
 */
[[nodiscard]] EstimateResult ldv_regression(const PanelDataset& ds, RegressionVariant variant);

/// Plug-in sum over y of mean(y_post | control, y_pre=y) * share of treated at y.
[[nodiscard]] EstimateResult ldv_nonparametric(const PanelDataset& ds);

/// Inverse probability weighting of control before-after changes with e = n1/n.
[[nodiscard]] EstimateResult ipw_did(const PanelDataset& ds);

/// Inverse probability weighting of control outcomes with odds e(y)/(1-e(y)).
[[nodiscard]] EstimateResult ipw_ldv(const PanelDataset& ds, Propensity propensity);

/// Runs the estimator named by spec (stratified when spec.stratified).
[[nodiscard]] EstimateResult estimate(const PanelDataset& ds, const EstimatorSpec& spec);

/**
 * @brief Covariate-conditional aggregation over discrete strata.
 *
 * Runs @p inner within each stratum that contains treated units and
 * averages mu1, mu0 with weights equal to each stratum's treated share.
 * Units without a stratum label form their own stratum.
 * @throws OverlapError when a stratum has treated units but no controls
 */
[[nodiscard]] EstimateResult stratified(const PanelDataset& ds, EstimatorSpec inner);

/// Logistic regression of group on (1, y_pre) by IRLS.
struct LogisticFit {
    double intercept = 0.0;
    double slope = 0.0;
    int iterations = 0;

    [[nodiscard]] double probability(double y) const noexcept;
};

inline constexpr int kLogisticMaxIterations = 100;
inline constexpr double kLogisticTolerance = 1e-10;

/// @throws FitError on non-convergence within kLogisticMaxIterations or a degenerate Hessian
[[nodiscard]] LogisticFit fit_logistic_propensity(const PanelDataset& ds);

}  // namespace didldv
