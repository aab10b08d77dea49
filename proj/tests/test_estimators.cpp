#include <doctest.h>

#include "didldv/errors.hpp"
#include "didldv/estimators.hpp"
#include "support.hpp"

using namespace didldv;
using doctest::Approx;

TEST_CASE("did_moment on the tiny set") {
    const auto r = did_moment(testing::tiny());
    CHECK(r.mu1 == Approx(3.5));
    CHECK(r.mu0 == Approx(7.0 / 3.0));
    CHECK(r.tau == Approx(7.0 / 6.0));
    REQUIRE(r.gamma);
    CHECK(*r.gamma == Approx(1.5));
    CHECK(r.n_treated == 2);
    CHECK(r.n_control == 3);
}

TEST_CASE("control-only regression on the tiny set") {
    const auto r = ldv_regression(testing::tiny(), RegressionVariant::control_only);
    CHECK(*r.coefficient("intercept") == Approx(-1.0 / 6.0));
    CHECK(*r.coefficient("y_pre") == Approx(1.5));
    CHECK(r.mu0 == Approx(17.0 / 6.0));
    CHECK(r.tau == Approx(2.0 / 3.0));
}

TEST_CASE("pooled regression on the tiny set") {
    const auto r = ldv_regression(testing::tiny(), RegressionVariant::pooled);
    CHECK(r.tau == Approx(2.0 / 3.0));
    CHECK(*r.coefficient("group") == Approx(2.0 / 3.0));
    CHECK(*r.coefficient("y_pre") == Approx(1.5));
    CHECK(r.mu0 == Approx(3.5 - 2.0 / 3.0));
}

TEST_CASE("quadratic regression needs three control levels") {
    const auto r = ldv_regression(testing::tiny(), RegressionVariant::control_only_quadratic);
    // control points (0,0),(1,1),(2,3) are fit exactly by y = x/2 + x^2/2
    CHECK(*r.coefficient("intercept") == Approx(0.0).epsilon(1e-12));
    CHECK(*r.coefficient("y_pre") == Approx(0.5));
    CHECK(*r.coefficient("y_pre_sq") == Approx(0.5));
    CHECK(r.mu0 == Approx((1.0 + 6.0) / 2.0));

    auto two_levels = testing::tiny();
    two_levels.units[2].y_pre = 1.0;
    CHECK_THROWS_AS((void)ldv_regression(two_levels, RegressionVariant::control_only_quadratic), SingularityError);
    CHECK_NOTHROW((void)ldv_regression(two_levels, RegressionVariant::control_only));
}

TEST_CASE("nonparametric LDV requires overlap") {
    CHECK_THROWS_AS((void)ldv_nonparametric(testing::tiny()), OverlapError);
    CHECK_THROWS_AS((void)ipw_ldv(testing::tiny(), Propensity::saturated_discrete), PositivityError);

    auto ds = testing::tiny();
    ds.units[4].y_pre = 2.0;
    const auto r = ldv_nonparametric(ds);
    // m0(1)=1, m0(2)=3, treated at 1 and 2
    CHECK(r.mu0 == Approx(2.0));
    CHECK(*r.coefficient("E[y_post|G=0,y_pre=1]") == Approx(1.0));
    const auto w = ipw_ldv(ds, Propensity::saturated_discrete);
    CHECK(w.mu0 == Approx(r.mu0));
    CHECK(*w.coefficient("e(y_pre=1)") == Approx(0.5));
}

TEST_CASE("nonparametric estimators reject continuous data") {
    auto ds = testing::tiny();
    ds.outcome_kind = OutcomeKind::continuous;
    CHECK_THROWS_AS((void)ldv_nonparametric(ds), EstimationError);
    CHECK_THROWS_AS((void)ipw_ldv(ds, Propensity::saturated_discrete), EstimationError);
}

TEST_CASE("ipw_did collapses to did_moment") {
    const auto a = ipw_did(testing::tiny());
    const auto b = did_moment(testing::tiny());
    CHECK(a.mu0 == Approx(b.mu0).epsilon(1e-14));
    CHECK(*a.coefficient("propensity") == Approx(0.4));
}

TEST_CASE("logistic propensity") {
    const auto ds = testing::tiny();
    const auto fit = fit_logistic_propensity(ds);
    CHECK(fit.iterations > 0);
    CHECK(fit.iterations <= kLogisticMaxIterations);
    CHECK(fit.slope > 0.0);
    // score equations: sum of fitted probabilities equals n1, and likewise weighted by y
    double s0 = 0.0, s1 = 0.0, t1 = 0.0;
    for (const auto& u : ds.units) {
        s0 += fit.probability(u.y_pre) - u.group;
        s1 += (fit.probability(u.y_pre) - u.group) * u.y_pre;
        t1 += u.group;
    }
    CHECK(s0 == Approx(0.0).epsilon(1e-8));
    CHECK(s1 == Approx(0.0).epsilon(1e-8));
    CHECK(t1 == 2.0);
    const auto r = ipw_ldv(ds, Propensity::logistic);
    CHECK(std::isfinite(r.mu0));
    CHECK(*r.coefficient("iterations") == fit.iterations);
}

TEST_CASE("logistic propensity fails under perfect separation") {
    auto ds = testing::tiny();
    ds.outcome_kind = OutcomeKind::continuous;
    ds.units[3].y_pre = 5.0;
    ds.units[4].y_pre = 6.0;
    CHECK_THROWS_AS((void)fit_logistic_propensity(ds), EstimationError);
}

TEST_CASE("gamma is omitted when mu0 is not positive") {
    auto ds = testing::tiny();
    for (auto& u : ds.units) {
        if (u.group == 0) u.y_post -= 10.0;
    }
    ds.outcome_kind = OutcomeKind::continuous;
    const auto r = did_moment(ds);
    CHECK(r.mu0 < 0.0);
    CHECK_FALSE(r.gamma.has_value());
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("empty groups raise EstimationError") {
    auto ds = testing::tiny();
    for (auto& u : ds.units) u.group = 0;
    CHECK_THROWS_AS((void)did_moment(ds), EstimationError);
    CHECK_THROWS_AS((void)ldv_regression(ds, RegressionVariant::pooled), EstimationError);
    CHECK_THROWS_AS((void)ipw_did(ds), EstimationError);
}

TEST_CASE("stratified aggregation weights by treated share") {
    auto a = testing::tiny();
    for (auto& u : a.units) u.stratum = "A";
    auto b = testing::tiny();
    for (auto& u : b.units) {
        u.unit_id += "b";
        u.stratum = "B";
        u.y_post += 1.0;
        if (u.group == 1) u.y_post += 2.0;
    }
    b.units.push_back({"t3b", 1, 1, 4, std::string("B")});
    PanelDataset ds = a;
    ds.units.insert(ds.units.end(), b.units.begin(), b.units.end());

    const auto ra = did_moment(a);
    const auto rb = did_moment(b);
    const auto r = stratified(ds, {Method::did_moment});
    CHECK(*r.coefficient("weight[A]") == Approx(2.0 / 5.0));
    CHECK(*r.coefficient("weight[B]") == Approx(3.0 / 5.0));
    CHECK(r.mu0 == Approx(0.4 * ra.mu0 + 0.6 * rb.mu0));
    CHECK(r.mu1 == Approx(0.4 * ra.mu1 + 0.6 * rb.mu1));
    CHECK(r.spec.name().rfind("stratified:", 0) == 0);
    CHECK(estimate(ds, {Method::did_moment, Propensity::saturated_discrete, true}).mu0 == Approx(r.mu0));
}

TEST_CASE("method names and aliases parse") {
    CHECK(parse_method("did") == Method::did_moment);
    CHECK(parse_method("ldv-np") == Method::ldv_nonparametric);
    CHECK(parse_method("ldv_pooled_reg") == Method::ldv_pooled_reg);
    CHECK_FALSE(parse_method("synthetic-control").has_value());
    for (auto m : {Method::did_moment, Method::ldv_control_reg, Method::ldv_control_reg_quadratic,
                   Method::ldv_pooled_reg, Method::ldv_nonparametric, Method::ipw_did, Method::ipw_ldv}) {
        CHECK(parse_method(to_string(m)) == m);
    }
    CHECK(is_ldv(Method::ipw_ldv));
    CHECK_FALSE(is_ldv(Method::ipw_did));
}

TEST_CASE("estimate dispatches to every method") {
    auto ds = testing::tiny();
    ds.units[4].y_pre = 2.0;
    CHECK(estimate(ds, {Method::did_moment}).mu0 == Approx(did_moment(ds).mu0));
    CHECK(estimate(ds, {Method::ldv_control_reg}).mu0 ==
          Approx(ldv_regression(ds, RegressionVariant::control_only).mu0));
    CHECK(estimate(ds, {Method::ldv_nonparametric}).mu0 == Approx(ldv_nonparametric(ds).mu0));
    CHECK(estimate(ds, {Method::ipw_ldv, Propensity::logistic}).spec.propensity == Propensity::logistic);
}

TEST_CASE("crash table point estimates") {
    const auto ds = testing::crash_counts();
    CHECK(did_moment(ds).mu0 == Approx(0.395166).epsilon(1e-5));
    CHECK(ldv_nonparametric(ds).mu0 == Approx(0.437784).epsilon(1e-5));
    const auto bin = testing::crash_binary();
    CHECK(did_moment(bin).mu0 == Approx(0.293656).epsilon(1e-5));
    CHECK(ldv_nonparametric(bin).mu0 == Approx(0.324016).epsilon(1e-5));
}
