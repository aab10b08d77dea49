#include <doctest.h>

#include <map>
#include <sstream>
#include <tuple>

#include "didldv/data.hpp"
#include "didldv/errors.hpp"
#include "support.hpp"

using namespace didldv;

namespace {

PanelDataset load_text(const std::string& text, Layout layout, OutcomeKind kind = OutcomeKind::continuous,
                       std::optional<int> top_code = std::nullopt) {
    std::istringstream in(text);
    return load_panel(in, layout, kind, top_code);
}

}  // namespace

TEST_CASE("wide and long layouts give the same dataset") {
    const auto wide = testing::load_file("tiny_wide.csv", Layout::wide, OutcomeKind::count);
    const auto lng = testing::load_file("tiny_long.csv", Layout::long_, OutcomeKind::count);
    REQUIRE(wide.size() == 5);
    CHECK(wide.units == lng.units);
    CHECK(wide.n_treated() == 2);
    CHECK(wide.n_control() == 3);
    CHECK(wide.units == testing::tiny().units);
}

TEST_CASE("long layout orders periods numerically and keeps first-appearance unit order") {
    const auto ds = load_text("unit,group,period,y\nb,1,10,7\na,0,9,1\nb,1,9,2\na,0,10,4\n", Layout::long_);
    REQUIRE(ds.size() == 2);
    CHECK(ds.units[0].unit_id == "b");
    CHECK(ds.units[0].y_pre == 2.0);
    CHECK(ds.units[0].y_post == 7.0);
    CHECK(ds.units[1].y_pre == 1.0);
    CHECK(ds.units[1].y_post == 4.0);
}

TEST_CASE("long layout rejects malformed panels") {
    CHECK_THROWS_AS(load_text("unit,group,period,y\na,0,1,1\na,0,2,1\nb,1,1,1\nb,1,3,1\n", Layout::long_),
                    ValidationError);
    CHECK_THROWS_AS(load_text("unit,group,period,y\na,0,1,1\na,0,2,1\nb,1,1,1\n", Layout::long_), ValidationError);
    CHECK_THROWS_AS(load_text("unit,group,period,y\na,0,1,1\na,1,2,1\nb,1,1,1\nb,1,2,1\n", Layout::long_),
                    ValidationError);
    CHECK_THROWS_AS(load_text("unit,group,period,y\na,0,1,1\na,0,1,1\nb,1,1,1\nb,1,2,1\n", Layout::long_),
                    ValidationError);
}

TEST_CASE("wide parse errors carry line numbers") {
    try {
        (void)load_text("unit,group,y_pre,y_post\na,0,1,2\nb,1,x,2\n", Layout::wide);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(load_text("unit,group,y_pre,y_post,extra\na,0,1,2,3\n", Layout::wide), ParseError);
    CHECK_THROWS_AS(load_text("unit,group,y_pre\na,0,1\n", Layout::wide), ParseError);
    CHECK_THROWS_AS(load_text("unit,group,y_pre,y_post\na,0,1\n", Layout::wide), ParseError);
    CHECK_THROWS_AS(load_text("unit,group,y_pre,y_post\na,0,,2\nb,1,1,1\n", Layout::wide), ParseError);
}

TEST_CASE("wide layout accepts quoting, BOM and blank lines") {
    const auto ds = load_text("\xEF\xBB\xBFunit,group,y_pre,y_post\n\n\"a,1\",0, 1.5 ,2\nb,1,+3,1e1\n", Layout::wide);
    REQUIRE(ds.size() == 2);
    CHECK(ds.units[0].unit_id == "a,1");
    CHECK(ds.units[0].y_pre == 1.5);
    CHECK(ds.units[1].y_pre == 3.0);
    CHECK(ds.units[1].y_post == 10.0);
}

TEST_CASE("validation rejects bad groups, empty groups and kind mismatches") {
    CHECK_THROWS_AS(load_text("unit,group,y_pre,y_post\na,2,1,2\nb,1,1,1\n", Layout::wide), ValidationError);
    CHECK_THROWS_AS(load_text("unit,group,y_pre,y_post\na,0,1,2\nb,0,1,1\n", Layout::wide), ValidationError);
    CHECK_THROWS_AS(load_text("unit,group,y_pre,y_post\na,0,1,2\nb,1,1,1\n", Layout::wide, OutcomeKind::binary),
                    ValidationError);
    CHECK_THROWS_AS(load_text("unit,group,y_pre,y_post\na,0,1.5,2\nb,1,1,1\n", Layout::wide, OutcomeKind::count),
                    ValidationError);
    CHECK_THROWS_AS(load_text("unit,group,y_pre,y_post\na,0,-1,2\nb,1,1,1\n", Layout::wide, OutcomeKind::count),
                    ValidationError);
    CHECK_THROWS_AS(load_text("unit,group,y_pre,y_post\na,0,1,2\na,1,1,1\n", Layout::wide), ValidationError);

    PanelDataset ds = testing::tiny();
    ds.units[0].y_post = std::nan("");
    ds.units[1].group = 5;
    const auto report = validate(ds);
    CHECK_FALSE(report.ok());
    CHECK(report.has("non-finite outcome"));
    CHECK(report.has("invalid group"));
    CHECK_FALSE(report.has("treated group empty"));
    CHECK(validate(testing::tiny()).ok());
}

TEST_CASE("contingency expansion preserves every cell count") {
    std::istringstream in(
        "group,y_pre,y_post,count\n0,0,0,3\n0,0,1,0\n0,1,1,2\n1,0,1,4\n1,1,0,1\n");
    const auto table = parse_contingency(in);
    const auto ds = expand_contingency(table);
    CHECK(ds.size() == 10);
    std::map<std::tuple<int, double, double>, int> tally;
    for (const auto& u : ds.units) ++tally[{u.group, u.y_pre, u.y_post}];
    for (const auto& c : table.cells) {
        const auto it = tally.find({c.group, double(c.y_pre_level), double(c.y_post_level)});
        CHECK((it == tally.end() ? 0 : it->second) == c.count);
    }
    CHECK(ds.units.front().unit_id == "1");
    CHECK(ds.units.back().unit_id == "10");
}

TEST_CASE("crash table loads with open-ended labels") {
    const auto ds = testing::crash_counts();
    CHECK(ds.size() == 1986);
    CHECK(ds.n_treated() == 331);
    CHECK(ds.n_control() == 1655);
    CHECK(ds.top_code == 3);

    // top code inferred from "3+" when the flag is omitted
    const auto inferred = testing::load_file("crash_counts.csv", Layout::contingency, OutcomeKind::count);
    CHECK(inferred.top_code == 3);
    CHECK(inferred.units == ds.units);

    const auto binary = testing::crash_binary();
    CHECK(binary.size() == 1986);
    CHECK(binary.n_treated() == 331);
}

TEST_CASE("a smaller top code collapses levels and a larger one is rejected") {
    const auto collapsed = testing::load_file("crash_counts.csv", Layout::contingency, OutcomeKind::binary, 1);
    for (const auto& u : collapsed.units) {
        CHECK(u.y_pre <= 1.0);
        CHECK(u.y_post <= 1.0);
    }
    const auto binary = testing::crash_binary();
    CHECK(group_moments(collapsed).control_post == doctest::Approx(group_moments(binary).control_post));
    CHECK(group_moments(collapsed).treated_pre == doctest::Approx(group_moments(binary).treated_pre));
    CHECK_THROWS_AS(testing::load_file("crash_counts.csv", Layout::contingency, OutcomeKind::count, 5),
                    ValidationError);
}

TEST_CASE("contingency input errors") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return expand_contingency(parse_contingency(in));
    };
    CHECK_THROWS_AS(parse("group,y_pre,y_post,count\n0,0,0,-1\n1,0,0,1\n"), ValidationError);
    CHECK_THROWS_AS(parse("group,y_pre,y_post,count\n0,0,0,1\n0,0,0,1\n1,0,0,1\n"), ValidationError);
    CHECK_THROWS_AS(parse("group,y_pre,y_post,count\n0,0,0,1\n0,0,0,0\n"), ValidationError);
    CHECK_THROWS_AS(parse("group,y_pre,y_post,count\n0,0,0,1\n1,0,x,1\n"), ParseError);
    CHECK_THROWS_AS(parse("group,y_pre,y_post,count\n0,2+,0,1\n1,3+,0,1\n"), ValidationError);
    CHECK_THROWS_AS(parse("group,y_pre,y_post,count\n0,0,0,1\n1,0,0,1.5\n"), ParseError);
}

TEST_CASE("group moments") {
    const auto m = group_moments(testing::tiny());
    CHECK(m.treated_pre == doctest::Approx(2.0));
    CHECK(m.treated_post == doctest::Approx(3.5));
    CHECK(m.control_pre == doctest::Approx(1.0));
    CHECK(m.control_post == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("layout and kind names round-trip") {
    for (auto k : {OutcomeKind::continuous, OutcomeKind::count, OutcomeKind::binary}) {
        CHECK(parse_outcome_kind(to_string(k)) == k);
    }
    for (auto l : {Layout::wide, Layout::long_, Layout::contingency}) CHECK(parse_layout(to_string(l)) == l);
    CHECK_FALSE(parse_layout("tall").has_value());
}
