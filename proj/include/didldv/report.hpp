#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "didldv/data.hpp"
#include "didldv/diagnostics.hpp"
#include "didldv/estimators.hpp"
#include "didldv/inference.hpp"
#include "didldv/simulate.hpp"

namespace didldv {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

[[nodiscard]] std::string_view tool_version() noexcept;

Json to_json(const ValidationReport& r);
Json to_json(const EstimateResult& r);
Json to_json(const StationarityReport& r);
Json to_json(const MonotonicityReport& r);
Json to_json(const Lemma1Result& r);
Json to_json(const BracketReport& r);
Json to_json(const IntervalEstimate& r);
Json to_json(const BootstrapSpec& s);
Json to_json(const ComparisonReport& r);
Json to_json(const DgpSpec& s);
Json to_json(const MonteCarloSummary& s);

/// Dataset facts echoed in reports (size, groups, kind, top code).
Json describe(const PanelDataset& ds);

/// Lower-case hex SHA-256 of the bytes.
[[nodiscard]] std::string sha256_hex(std::string_view bytes);

struct Envelope {
    std::string command;
    Json flags = Json::object();
    std::optional<std::string> input_digest;
    std::optional<std::string> timestamp;
    Json payload = Json::object();
};

/// {schema_version, tool, version, command, flags, input_digest, timestamp, payload}
[[nodiscard]] Json to_json(const Envelope& e);

/**
 * @brief Human-readable rendering of an envelope.
 *
 * Walks the JSON, so every displayed number exists in the payload; reals
 * are rounded to three decimals.
 */
[[nodiscard]] std::string render_markdown(const Json& envelope);

/// y,cdf_treated,cdf_control
void write_cdf_csv(std::ostream& out, const MonotonicityReport& r);

/// y,conditional_mean,n_control,fitted_linear,fitted_quadratic. Discrete outcomes
/// list every control level; continuous ones a 51-point grid over the control y_pre range.
void write_fit_csv(std::ostream& out, const PanelDataset& ds);

}  // namespace didldv
