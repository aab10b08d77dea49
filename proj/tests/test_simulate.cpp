#include <doctest.h>

#include <sstream>

#include "didldv/diagnostics.hpp"
#include "didldv/simulate.hpp"

using namespace didldv;
using doctest::Approx;

TEST_CASE("generation is reproducible from the seed") {
    DgpSpec spec;
    spec.n = 300;
    spec.selection = -1.0;
    const auto a = generate(spec, 9);
    const auto b = generate(spec, 9);
    const auto c = generate(spec, 10);
    CHECK(a.units == b.units);
    CHECK_FALSE(a.units == c.units);
    CHECK(a.size() == 300);
    CHECK(a.n_treated() > 0);
    CHECK(a.n_control() > 0);
}

TEST_CASE("negative selection puts treated units lower in y_pre") {
    DgpSpec spec;
    spec.n = 4000;
    spec.selection = -1.5;
    const auto ds = generate(spec, 3);
    const auto m = group_moments(ds);
    CHECK(m.treated_pre < m.control_pre);
    CHECK(check_monotonicity(ds, 0.02).direction == Dominance::a);
}

TEST_CASE("invalid specs are rejected") {
    DgpSpec spec;
    spec.n = 2;
    CHECK_THROWS_AS(check_spec(spec), std::invalid_argument);
    spec.n = 100;
    spec.noise_sd = 0.0;
    CHECK_THROWS_AS((void)generate(spec, 1), std::invalid_argument);
    CHECK(parse_family("parallel_trends") == DgpFamily::parallel_trends_fe);
    CHECK_FALSE(parse_family("random_walk").has_value());
}

TEST_CASE("monte carlo is thread-count independent") {
    DgpSpec spec;
    spec.n = 200;
    spec.selection = -1.0;
    const auto a = monte_carlo(spec, 40, 77, 1);
    const auto b = monte_carlo(spec, 40, 77, 3);
    REQUIRE(a.completed == 40);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].tau_did == b.records[i].tau_did);
        CHECK(a.records[i].tau_ldv == b.records[i].tau_ldv);
    }
    CHECK(a.estimator("did_moment").mean == b.estimator("did_moment").mean);
    CHECK_THROWS((void)a.estimator("synthetic"));
}

TEST_CASE("parallel trends family favours DID") {
    DgpSpec spec;
    spec.family = DgpFamily::parallel_trends_fe;
    spec.n = 1000;
    spec.selection = 1.0;
    const auto mc = monte_carlo(spec, 100, 5);
    const auto& did = mc.estimator("did_moment");
    const auto& ldv = mc.estimator("ldv_control_reg");
    CHECK(std::abs(did.bias) < 3.0 * did.mc_se + 1e-12);
    // treated have larger fixed effects (direction b), so LDV sits above DID
    CHECK(ldv.bias > 0.0);
    CHECK(mc.freq_did_ge_ldv < 0.05);
}

TEST_CASE("replicate csv has one row per replicate") {
    DgpSpec spec;
    spec.n = 50;
    const auto mc = monte_carlo(spec, 5, 1);
    std::ostringstream out;
    write_replicates_csv(out, mc);
    const auto text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
    CHECK(text.rfind("index,seed,ok", 0) == 0);
}
