#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace didldv::detail {

struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<CsvRow> rows;

    /// Column index by (case-sensitive) name.
    [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
};

/// Reads comma-separated text with a header line. Blank lines are skipped,
/// fields are whitespace-trimmed, double quotes enclose fields containing commas.
/// @throws ParseError on an unterminated quote or a row whose width differs from the header.
[[nodiscard]] CsvTable read_csv(std::istream& in);

/// Locale-independent real parse. Accepts "nan"/"inf" so validation can report them.
[[nodiscard]] std::optional<double> parse_real(std::string_view text) noexcept;
[[nodiscard]] std::optional<long long> parse_integer(std::string_view text) noexcept;

}  // namespace didldv::detail
