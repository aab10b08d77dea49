#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace didldv {

/// Column-major regressor matrix with a name per column.
struct Design {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    [[nodiscard]] std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
    [[nodiscard]] std::size_t cols() const noexcept { return columns.size(); }

    void add(std::string name, std::vector<double> column) {
        names.push_back(std::move(name));
        columns.push_back(std::move(column));
    }
};

struct LeastSquaresFit {
    std::vector<double> coefficients;
    double rss = 0.0;
    std::vector<std::string> regressors;

    /// Coefficient by regressor name; throws std::out_of_range if absent.
    [[nodiscard]] double coefficient(const std::string& name) const;
    [[nodiscard]] double predict(std::span<const double> row) const;
};

/**
 * @brief Ordinary least squares via the normal equations.
 *
 * X'X is factorized by Cholesky. A column is declared collinear when its
 * pivot falls below 1e-12 of its own diagonal entry, i.e. less than a
 * 1e-12 fraction of its sum of squares is left unexplained by the
 * preceding columns.
 *
 * @throws SingularityError naming the collinear column(s)
 * @throws std::invalid_argument on shape mismatch or empty design
 */
[[nodiscard]] LeastSquaresFit fit_least_squares(const Design& design, std::span<const double> response);

/// Weighted variant minimizing sum w_i r_i^2; weights must be nonnegative.
[[nodiscard]] LeastSquaresFit fit_weighted_least_squares(const Design& design, std::span<const double> response,
                                                         std::span<const double> weights);

/// Relative pivot threshold used for rank detection.
inline constexpr double kPivotTolerance = 1e-12;

}  // namespace didldv
