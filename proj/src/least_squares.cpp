#include "didldv/least_squares.hpp"

#include <cmath>
#include <stdexcept>

#include "didldv/errors.hpp"

namespace didldv {

double LeastSquaresFit::coefficient(const std::string& name) const {
    for (std::size_t i = 0; i < regressors.size(); ++i) {
        if (regressors[i] == name) return coefficients[i];
    }
    throw std::out_of_range("no regressor named '" + name + "'");
}

double LeastSquaresFit::predict(std::span<const double> row) const {
    if (row.size() != coefficients.size()) throw std::invalid_argument("predict: row width mismatch");
    double y = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) y += coefficients[j] * row[j];
    return y;
}

namespace {

LeastSquaresFit solve(const Design& design, std::span<const double> response, std::span<const double> weights) {
    const std::size_t p = design.cols();
    const std::size_t n = response.size();
    if (p == 0) throw std::invalid_argument("least squares: design has no columns");
    if (design.names.size() != p) throw std::invalid_argument("least squares: one name per column required");
    for (const auto& col : design.columns) {
        if (col.size() != n) throw std::invalid_argument("least squares: rows(design) != length(response)");
    }
    if (!weights.empty() && weights.size() != n) throw std::invalid_argument("least squares: weight length mismatch");
    const auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

    // Normal equations A b = c, A = X'WX (lower triangle used), c = X'Wy.
    std::vector<double> a(p * p, 0.0);
    std::vector<double> c(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        const auto& xj = design.columns[j];
        for (std::size_t k = 0; k <= j; ++k) {
            const auto& xk = design.columns[k];
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += w(i) * xj[i] * xk[i];
            a[j * p + k] = s;
        }
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += w(i) * xj[i] * response[i];
        c[j] = s;
    }

    // In-place Cholesky, A = L L'.
    std::vector<double> l(p * p, 0.0);
    std::vector<std::string> collinear;
    for (std::size_t j = 0; j < p; ++j) {
        double d = a[j * p + j];
        for (std::size_t k = 0; k < j; ++k) d -= l[j * p + k] * l[j * p + k];
        if (!(d > kPivotTolerance * a[j * p + j]) || !std::isfinite(d)) {
            collinear.push_back(design.names[j]);
            continue;
        }
        const double root = std::sqrt(d);
        l[j * p + j] = root;
        for (std::size_t i = j + 1; i < p; ++i) {
            double s = a[i * p + j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i * p + k] * l[j * p + k];
            l[i * p + j] = s / root;
        }
    }
    if (!collinear.empty()) {
        std::string msg = "singular design: column";
        msg += collinear.size() > 1 ? "s " : " ";
        for (std::size_t i = 0; i < collinear.size(); ++i) {
            msg += (i ? ", '" : "'") + collinear[i] + "'";
        }
        msg += " linearly dependent on preceding columns (";
        for (std::size_t i = 0; i < p; ++i) msg += (i ? ", " : "") + design.names[i];
        msg += ")";
        throw SingularityError(msg);
    }

    std::vector<double> z(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        double s = c[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * p + k] * z[k];
        z[i] = s / l[i * p + i];
    }
    std::vector<double> b(p, 0.0);
    for (std::size_t ii = p; ii-- > 0;) {
        double s = z[ii];
        for (std::size_t k = ii + 1; k < p; ++k) s -= l[k * p + ii] * b[k];
        b[ii] = s / l[ii * p + ii];
    }

    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = response[i];
        for (std::size_t j = 0; j < p; ++j) r -= b[j] * design.columns[j][i];
        rss += w(i) * r * r;
    }
    return {std::move(b), rss, design.names};
}

}  // namespace

LeastSquaresFit fit_least_squares(const Design& design, std::span<const double> response) {
    return solve(design, response, {});
}

LeastSquaresFit fit_weighted_least_squares(const Design& design, std::span<const double> response,
                                           std::span<const double> weights) {
    for (double wi : weights) {
        if (!(wi >= 0.0)) throw std::invalid_argument("least squares: weights must be nonnegative");
    }
    if (weights.size() != response.size()) throw std::invalid_argument("least squares: weight length mismatch");
    return solve(design, response, weights);
}

}  // namespace didldv
