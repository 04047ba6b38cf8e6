#include <doctest.h>

#include <string>

#include "relbn/grid.hpp"
#include "support.hpp"

using namespace relbn;

namespace {

const char* kTwoBus = R"({
  "name": "tiny",
  "buses": [{"id": 1, "slack": true}, {"id": 2, "slack": false}],
  "generators": [{"id": 1, "bus": 1, "p_min": 0, "p_max": 100, "for": 0.05}],
  "lines": [{"id": 1, "from": 1, "to": 2, "x": 0.1, "rating": 50, "for": 0.01}],
  "loads": [{"bus": 2, "mw": 80}]
})";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("minimal two-bus case parses") {
  const auto g = parse_case(kTwoBus);
  CHECK(g.name == "tiny");
  CHECK(g.buses.size() == 2);
  CHECK(g.generators.size() == 1);
  CHECK(g.lines.size() == 1);
  REQUIRE(g.loads.size() == 1);
  CHECK(g.loads[0].weight == 1.0);
  CHECK(g.base_mva == 100.0);
  CHECK(g.slack_bus() == 1);
  CHECK(g.total_demand() == 80.0);
  CHECK(g.total_capacity() == 100.0);
}

TEST_CASE("bundled case counts") {
  const auto rbts = builtin_case("rbts");
  CHECK(rbts.buses.size() == 6);
  CHECK(rbts.generators.size() == 11);
  CHECK(rbts.lines.size() == 9);
  CHECK(rbts.loads.size() == 5);

  const auto rts = builtin_case("ieee-rts-24");
  CHECK(rts.buses.size() == 24);
  CHECK(rts.generators.size() == 32);
  CHECK(rts.lines.size() == 38);
  CHECK(rts.loads.size() == 17);
}

TEST_CASE("bundled case totals match the published peaks") {
  const auto rbts = builtin_case("rbts");
  CHECK(rbts.total_demand() == doctest::Approx(185.0).epsilon(1e-12));
  CHECK(rbts.total_capacity() == doctest::Approx(240.0).epsilon(1e-12));
  REQUIRE(rbts.total_demand_mw);
  CHECK(*rbts.total_demand_mw == 185.0);

  const auto rts = builtin_case("ieee-rts-24");
  CHECK(rts.total_demand() == doctest::Approx(2850.0).epsilon(1e-12));
  CHECK(rts.total_capacity() == doctest::Approx(3405.0).epsilon(1e-12));
  REQUIRE(rts.total_demand_mw);
  CHECK(*rts.total_demand_mw == 2850.0);
}

TEST_CASE("bundled case checksums are pinned") {
  // Any edit to the data files must update these.
  CHECK(fingerprint(builtin_case("rbts")).checksum == "dfa5c3d6fb8072cc");
  CHECK(fingerprint(builtin_case("ieee-rts-24")).checksum == "c606cf22135e7dc7");
}

TEST_CASE("unknown builtin name is rejected") {
  CHECK_THROWS_AS(builtin_case("rts96"), CaseError);
  CHECK_THROWS_AS(load_case("rts96"), CaseError);
  const auto names = builtin_case_names();
  CHECK(names == std::vector<std::string>{"rbts", "ieee-rts-24"});
}

TEST_CASE("bundled cases validate cleanly") {
  for (const auto& name : builtin_case_names()) {
    const auto report = validate_case(builtin_case(name));
    CHECK(report.ok());
    CHECK(report.warnings.empty());
  }
}

TEST_CASE("forced outage rate above one is a single violation naming the component") {
  auto g = parse_case(kTwoBus);
  g.generators[0].for_prob = 1.2;
  const auto report = validate_case(g);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].find("generator") != std::string::npos);
  CHECK(report.violations[0].find("1") != std::string::npos);
  CHECK_THROWS_AS(parse_case(replace(kTwoBus, "\"for\": 0.05", "\"for\": 1.2")), CaseError);
}

TEST_CASE("two slack buses is a single violation") {
  auto g = parse_case(kTwoBus);
  g.buses[1].is_slack = true;
  const auto report = validate_case(g);
  CHECK(report.violations.size() == 1);
}

TEST_CASE("other invariants") {
  auto base = parse_case(kTwoBus);
  SUBCASE("line to itself") {
    base.lines[0].to_bus = 1;
    CHECK(validate_case(base).violations.size() == 1);
  }
  SUBCASE("non-positive reactance") {
    base.lines[0].reactance = 0.0;
    CHECK(validate_case(base).violations.size() == 1);
  }
  SUBCASE("dangling generator bus") {
    base.generators[0].bus = 7;
    CHECK(validate_case(base).violations.size() == 1);
  }
  SUBCASE("p_min above p_max") {
    base.generators[0].p_min = 150.0;
    CHECK(validate_case(base).violations.size() == 1);
  }
  SUBCASE("two loads on one bus") {
    base.loads.push_back({2, 1.0, 1.0});
    CHECK(validate_case(base).violations.size() == 1);
  }
  SUBCASE("duplicate generator id") {
    base.generators.push_back(base.generators[0]);
    CHECK(validate_case(base).violations.size() == 1);
  }
  SUBCASE("capacity short of demand only warns") {
    base.loads[0].demand = 500.0;
    const auto report = validate_case(base);
    CHECK(report.ok());
    CHECK(report.warnings.size() == 1);
  }
}

TEST_CASE("malformed text") {
  CHECK_THROWS_AS(parse_case("{"), CaseError);
  CHECK_THROWS_AS(parse_case(replace(kTwoBus, "\"name\"", "\"nmae\"")), CaseError);
  CHECK_THROWS_AS(parse_case(replace(kTwoBus, "\"x\": 0.1", "\"x\": 0.1, \"r\": 0.01")), CaseError);
  CHECK_THROWS_AS(parse_case(replace(kTwoBus, "\"mw\": 80", "\"mw\": \"80\"")), CaseError);
  CHECK_THROWS_AS(parse_case(replace(kTwoBus, "\"id\": 1, \"bus\"", "\"id\": 1.5, \"bus\"")), CaseError);
}

TEST_CASE("parse and serialize round trip") {
  for (const auto& name : builtin_case_names()) {
    const auto g = builtin_case(name);
    const auto text = serialize_case(g);
    const auto again = parse_case(text);
    CHECK(serialize_case(again) == text);
    CHECK(fingerprint(again) == fingerprint(g));
    REQUIRE(again.generators.size() == g.generators.size());
    for (std::size_t i = 0; i < g.generators.size(); ++i) {
      CHECK(again.generators[i].for_prob == g.generators[i].for_prob);
      CHECK(again.generators[i].p_max == g.generators[i].p_max);
    }
    for (std::size_t i = 0; i < g.lines.size(); ++i) {
      CHECK(again.lines[i].reactance == g.lines[i].reactance);
      CHECK(again.lines[i].rating == g.lines[i].rating);
      CHECK(again.lines[i].for_prob == g.lines[i].for_prob);
    }
  }
}

TEST_CASE("load scaling") {
  const auto g = builtin_case("rbts");
  const auto half = scale_loads(g, 0.5);
  CHECK(half.total_demand() == doctest::Approx(92.5));
  CHECK(validate_case(half).ok());
  CHECK_FALSE(fingerprint(half) == fingerprint(g));
  CHECK(fingerprint(scale_loads(g, 1.0)) == fingerprint(g));
  CHECK_THROWS_AS(scale_loads(g, -1.0), std::invalid_argument);
}

TEST_CASE("fingerprint depends on every field") {
  auto g = test::two_bus_case();
  const auto before = fingerprint(g);
  g.lines[0].rating += 1e-9;
  CHECK_FALSE(fingerprint(g) == before);
}
