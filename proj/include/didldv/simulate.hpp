#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "didldv/data.hpp"

namespace didldv {

/**
 * ignorability_ar:   y_post = (1 - beta) * baseline_mean + beta * y_pre + tau * G + noise,
 *                    with G depending on y_pre only.
 * parallel_trends_fe: y_T = alpha_i + lambda_T + tau * D_T + noise, with G depending on alpha_i
 *                    and lambda_post - lambda_pre = trend.
 */
enum class DgpFamily { ignorability_ar, parallel_trends_fe };

[[nodiscard]] std::string_view to_string(DgpFamily f) noexcept;
[[nodiscard]] std::optional<DgpFamily> parse_family(std::string_view text) noexcept;

struct DgpSpec {
    DgpFamily family = DgpFamily::ignorability_ar;
    std::size_t n = 2000;
    double tau_true = 1.0;
    double beta = 0.5;
    /// Logistic selection slope on the standardized y_pre (ignorability_ar) or
    /// fixed effect (parallel_trends_fe). Negative: treated units have smaller values.
    double selection = 0.0;
    double noise_sd = 1.0;
    double baseline_mean = 0.0;
    double baseline_sd = 1.0;
    double trend = 0.5;
};

/// @throws std::invalid_argument when n < 4, noise_sd <= 0 or baseline_sd <= 0
void check_spec(const DgpSpec& spec);

/// Draws one continuous panel. Both groups are guaranteed nonempty (the whole
/// sample is redrawn from the same stream otherwise).
[[nodiscard]] PanelDataset generate(const DgpSpec& spec, std::uint64_t seed);

struct ReplicateRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::size_t n_treated = 0;
    double tau_did = 0.0;
    double tau_ldv = 0.0;         ///< control-only linear regression
    double tau_ldv_pooled = 0.0;  ///< pooled regression coefficient on G
    double beta_hat = 0.0;
    bool stationary = false;
    char direction = 'n';  ///< 'a', 'b' or 'n'
};

struct EstimatorSummary {
    std::string name;
    double mean = 0.0;
    double bias = 0.0;
    double sd = 0.0;
    double mc_se = 0.0;
};

struct MonteCarloSummary {
    DgpSpec spec;
    std::uint64_t seed = 0;
    std::size_t replications = 0;
    std::size_t completed = 0;
    std::size_t failed = 0;
    std::vector<EstimatorSummary> estimators;  ///< did_moment, ldv_control_reg, ldv_pooled_reg
    double freq_did_ge_ldv = 0.0;
    double stationarity_rate = 0.0;
    double direction_a_rate = 0.0;
    double direction_b_rate = 0.0;
    std::size_t premises_met = 0;    ///< replicates where stationarity and direction a or b hold
    std::size_t premises_agree = 0;  ///< of those, ordering as predicted
    std::vector<ReplicateRecord> records;

    [[nodiscard]] const EstimatorSummary& estimator(std::string_view name) const;
};

/// R generate+estimate cycles; replicate r uses derive_seed(seed, r). Estimation
/// failures are counted, not thrown. Output does not depend on @p threads.
[[nodiscard]] MonteCarloSummary monte_carlo(const DgpSpec& spec, std::size_t replications, std::uint64_t seed,
                                            unsigned threads = 0);

/// index,seed,ok,n_treated,tau_did,tau_ldv,tau_ldv_pooled,beta_hat,stationary,direction,error
void write_replicates_csv(std::ostream& out, const MonteCarloSummary& summary);

}  // namespace didldv
