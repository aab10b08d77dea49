#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace didldv {

enum class OutcomeKind { continuous, count, binary };
enum class Layout { wide, long_, contingency };

[[nodiscard]] std::string_view to_string(OutcomeKind kind) noexcept;
[[nodiscard]] std::string_view to_string(Layout layout) noexcept;
[[nodiscard]] std::optional<OutcomeKind> parse_outcome_kind(std::string_view text) noexcept;
[[nodiscard]] std::optional<Layout> parse_layout(std::string_view text) noexcept;

/**
 * @brief One unit observed before (y_pre) and after (y_post) treatment.
 *
 * group is 1 for units treated in the after period and 0 for controls.
 * stratum is an optional discrete covariate label.
 */
struct PanelUnit {
    std::string unit_id;
    int group = 0;
    double y_pre = 0.0;
    double y_post = 0.0;
    std::optional<std::string> stratum;

    friend bool operator==(const PanelUnit&, const PanelUnit&) = default;
};

/**
 * @brief Two-period two-group panel.
 *
 * A PanelDataset can be built in an invalid state; validate() reports the
 * violations and load_panel() refuses to return an invalid dataset.
 * top_code is set when the data came from a contingency table with a
 * "K and above" level, in which case outcomes >= K were materialized as K.
 */
struct PanelDataset {
    std::vector<PanelUnit> units;
    OutcomeKind outcome_kind = OutcomeKind::continuous;
    std::optional<int> top_code;

    [[nodiscard]] std::size_t size() const noexcept { return units.size(); }
    [[nodiscard]] std::size_t n_treated() const noexcept;
    [[nodiscard]] std::size_t n_control() const noexcept;
    [[nodiscard]] bool is_discrete() const noexcept { return outcome_kind != OutcomeKind::continuous; }
    [[nodiscard]] bool has_strata() const noexcept;
};

struct ContingencyCell {
    std::int64_t y_pre_level = 0;
    std::int64_t y_post_level = 0;
    int group = 0;
    std::int64_t count = 0;
};

/// Cross-classified counts of (y_pre, y_post) per group.
struct ContingencyTable {
    std::vector<ContingencyCell> cells;
    std::optional<int> top_code;
};

/// Per-group sample sizes and period means.
struct GroupMoments {
    std::size_t n_treated = 0;
    std::size_t n_control = 0;
    double treated_pre = 0.0;
    double treated_post = 0.0;
    double control_pre = 0.0;
    double control_post = 0.0;
};

[[nodiscard]] GroupMoments group_moments(const PanelDataset& ds);

struct Violation {
    std::string code;
    std::string detail;
    std::optional<std::size_t> unit_index;
};

struct ValidationReport {
    std::vector<Violation> violations;

    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
    [[nodiscard]] bool has(std::string_view code) const noexcept;
    /// All violation codes joined by "; ".
    [[nodiscard]] std::string summary() const;
};

/**
 * @brief Lists every invariant violation of the dataset.
 *
 * Codes: "invalid group", "non-finite outcome", "outcome out of range",
 * "non-integer count outcome", "treated group empty", "control group empty".
 * Row-level codes are reported once per offending unit.
 */
[[nodiscard]] ValidationReport validate(const PanelDataset& ds);

/**
 * @brief Expands a contingency table into one PanelUnit per counted unit.
 *
 * Levels at or above top_code are materialized as top_code. Unit ids are
 * assigned sequentially from 1 in cell order.
 * @throws ValidationError on negative counts, duplicate cells, bad group
 *         codes or an empty group.
 */
[[nodiscard]] PanelDataset expand_contingency(const ContingencyTable& table,
                                              OutcomeKind kind = OutcomeKind::count);

/// Parses a contingency CSV (group,y_pre,y_post,count). Levels written as "K+"
/// declare a top code of K unless @p top_code overrides it.
[[nodiscard]] ContingencyTable parse_contingency(std::istream& source, std::optional<int> top_code = std::nullopt);

/**
 * @brief Reads and validates a panel CSV in the given layout.
 *
 * wide:        unit,group,y_pre,y_post[,stratum]
 * long:        unit,period,group,y[,stratum] with exactly two period values;
 *              the smaller one (numeric when both parse, else lexicographic) is "pre"
 * contingency: group,y_pre,y_post,count
 *
 * @throws ParseError for malformed rows (with line number)
 * @throws ValidationError for invariant violations
 */
[[nodiscard]] PanelDataset load_panel(std::istream& source, Layout layout, OutcomeKind kind,
                                      std::optional<int> top_code = std::nullopt);

}  // namespace didldv
