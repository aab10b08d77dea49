#include <doctest.h>

#include <array>
#include <random>

#include "didldv/errors.hpp"
#include "didldv/least_squares.hpp"

using namespace didldv;

namespace {

double det3(const std::array<std::array<double, 3>, 3>& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// Solve the 3x3 normal equations by Cramer's rule.
std::array<double, 3> cramer(const Design& d, const std::vector<double>& y) {
    std::array<std::array<double, 3>, 3> a{};
    std::array<double, 3> b{};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t r = 0; r < y.size(); ++r) a[i][j] += d.columns[i][r] * d.columns[j][r];
        }
        for (std::size_t r = 0; r < y.size(); ++r) b[i] += d.columns[i][r] * y[r];
    }
    const double det = det3(a);
    std::array<double, 3> x{};
    for (std::size_t k = 0; k < 3; ++k) {
        auto m = a;
        for (std::size_t i = 0; i < 3; ++i) m[i][k] = b[i];
        x[k] = det3(m) / det;
    }
    return x;
}

}  // namespace

TEST_CASE("simple regression matches closed form") {
    Design d;
    d.add("intercept", {1, 1, 1});
    d.add("x", {0, 1, 2});
    const std::vector<double> y{0, 1, 3};
    const auto fit = fit_least_squares(d, y);
    CHECK(fit.coefficient("intercept") == doctest::Approx(-1.0 / 6.0));
    CHECK(fit.coefficient("x") == doctest::Approx(1.5));
    CHECK(fit.rss == doctest::Approx(1.0 / 6.0));
    const std::array<double, 2> row{1.0, 3.0};
    CHECK(fit.predict(row) == doctest::Approx(-1.0 / 6.0 + 4.5));
}

TEST_CASE("three-regressor fit agrees with Cramer's rule") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 5 + rep % 20;
        Design d;
        std::vector<double> one(n, 1.0), x1(n), x2(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x1[i] = z(rng);
            x2[i] = z(rng) + 0.3 * x1[i];
            y[i] = 1.0 + 2.0 * x1[i] - x2[i] + z(rng);
        }
        d.add("a", one);
        d.add("b", x1);
        d.add("c", x2);
        const auto fit = fit_least_squares(d, y);
        const auto ref = cramer(d, y);
        for (std::size_t k = 0; k < 3; ++k) CHECK(fit.coefficients[k] == doctest::Approx(ref[k]).epsilon(1e-9));
    }
}

TEST_CASE("weighted fit equals fit on replicated rows") {
    Design w;
    w.add("intercept", {1, 1, 1});
    w.add("x", {0, 1, 3});
    const std::vector<double> y{1, 2, 2};
    const std::vector<double> weights{2, 1, 3};
    Design r;
    r.add("intercept", {1, 1, 1, 1, 1, 1});
    r.add("x", {0, 0, 1, 3, 3, 3});
    const std::vector<double> yr{1, 1, 2, 2, 2, 2};
    const auto a = fit_weighted_least_squares(w, y, weights);
    const auto b = fit_least_squares(r, yr);
    CHECK(a.coefficients[0] == doctest::Approx(b.coefficients[0]));
    CHECK(a.coefficients[1] == doctest::Approx(b.coefficients[1]));
}

TEST_CASE("collinear designs raise SingularityError naming the column") {
    Design d;
    d.add("intercept", {1, 1, 1, 1});
    d.add("x", {1, 2, 3, 4});
    d.add("twice_x", {2, 4, 6, 8});
    const std::vector<double> y{1, 2, 2, 5};
    try {
        (void)fit_least_squares(d, y);
        FAIL("expected SingularityError");
    } catch (const SingularityError& e) {
        CHECK(std::string(e.what()).find("twice_x") != std::string::npos);
    }

    Design constant;
    constant.add("intercept", {1, 1, 1});
    constant.add("x", {2, 2, 2});
    CHECK_THROWS_AS((void)fit_least_squares(constant, std::vector<double>{1, 2, 3}), SingularityError);
}

TEST_CASE("underdetermined and mismatched inputs are rejected") {
    Design d;
    d.add("intercept", {1});
    d.add("x", {1});
    CHECK_THROWS_AS((void)fit_least_squares(d, std::vector<double>{1}), EstimationError);
    Design e;
    e.add("intercept", {1, 1, 1});
    CHECK_THROWS((void)fit_least_squares(e, std::vector<double>{1, 2}));
}

TEST_CASE("unknown coefficient name throws") {
    Design d;
    d.add("intercept", {1, 1});
    const auto fit = fit_least_squares(d, std::vector<double>{1, 3});
    CHECK(fit.coefficient("intercept") == doctest::Approx(2.0));
    CHECK_THROWS((void)fit.coefficient("slope"));
}
