#include <cmath>
#include <numbers>

#include <doctest.h>

#include "dc2ac/errors.hpp"
#include "dc2ac/matpower.hpp"

#include "support.hpp"

using namespace dc2ac;
using testsupport::load_case;

namespace {

const char* kTinyCase = R"(function mpc = tiny
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1.02	0	138	1	1.06	0.94;
	2	1	90	30	1	2	1	1	-5	138	1	1.1	0.9;
	3	2	0	0	0	0	1	1	0	138	1	1.06	0.94;
];
mpc.gen = [
	1	40	5	80	-60	1.05	100	1	250	10	0	0	0	0	0	0	0	0	0	0	0;
	3	0	0	40	-40	1	100	0	100	0	0	0	0	0	0	0	0	0	0	0	0;
];
mpc.branch = [
	1	2	0.02	0.06	0.03	130	0	0	0	0	1	-360	360;
	2	3	0.05	0.19	0	0	0	0	0.98	30	1	-360	360;
];
mpc.gencost = [
	2	0	0	3	0.01	40	120;
	2	0	0	2	25	0	0;
];
)";

}  // namespace

TEST_SUITE("matpower") {

TEST_CASE("tiny case parses with per-unit conversion") {
  NetworkCase net = parse_matpower(kTinyCase);
  CHECK(net.name == "tiny");
  CHECK(net.base_mva == 100.0);
  REQUIRE(net.n_buses() == 3);
  REQUIRE(net.n_generators() == 2);
  REQUIRE(net.n_branches() == 2);
  CHECK(net.finalized());

  CHECK(net.buses[0].role == BusRole::REF);
  CHECK(net.buses[1].role == BusRole::PQ);
  CHECK(net.buses[2].role == BusRole::PV);
  CHECK(net.buses[1].p_d == doctest::Approx(0.9));
  CHECK(net.buses[1].q_d == doctest::Approx(0.3));
  CHECK(net.buses[1].gs == doctest::Approx(0.01));
  CHECK(net.buses[1].bs == doctest::Approx(0.02));
  CHECK(net.buses[0].vm_init == doctest::Approx(1.02));
  CHECK(net.buses[1].va_init ==
        doctest::Approx(-5.0 * std::numbers::pi / 180.0));
  CHECK(net.buses[1].v_min == doctest::Approx(0.9));
  CHECK(net.buses[1].v_max == doctest::Approx(1.1));

  CHECK(net.generators[0].bus == 1);
  CHECK(net.generators[0].p_g == doctest::Approx(0.4));
  CHECK(net.generators[0].q_g == doctest::Approx(0.05));
  CHECK(net.generators[0].p_max == doctest::Approx(2.5));
  CHECK(net.generators[0].p_min == doctest::Approx(0.1));
  CHECK(net.generators[0].q_max == doctest::Approx(0.8));
  CHECK(net.generators[0].q_min == doctest::Approx(-0.6));
  CHECK(net.generators[0].v_setpoint == doctest::Approx(1.05));
  CHECK(net.generators[0].in_service);
  CHECK_FALSE(net.generators[1].in_service);

  CHECK(net.branches[0].r == doctest::Approx(0.02));
  CHECK(net.branches[0].x == doctest::Approx(0.06));
  CHECK(net.branches[0].b_charge == doctest::Approx(0.03));
  CHECK(net.branches[0].rate_a == doctest::Approx(1.3));
  CHECK(net.branches[0].tap == 1.0);  // stored zero means nominal
  CHECK(net.branches[0].shift == 0.0);
  CHECK(net.branches[1].rate_a == 0.0);  // unrated
  CHECK(net.branches[1].tap == doctest::Approx(0.98));
  CHECK(net.branches[1].shift ==
        doctest::Approx(30.0 * std::numbers::pi / 180.0));

  // Costs stay in MW terms.
  CHECK(net.generators[0].cost.c2 == doctest::Approx(0.01));
  CHECK(net.generators[0].cost.c1 == doctest::Approx(40.0));
  CHECK(net.generators[0].cost.c0 == doctest::Approx(120.0));
  CHECK(net.generators[0].cost.eval_mw(100.0) == doctest::Approx(4220.0));
  // Two-term row is linear.
  CHECK(net.generators[1].cost.c2 == 0.0);
  CHECK(net.generators[1].cost.c1 == doctest::Approx(25.0));
}

TEST_CASE("name hint applies when the text names no function") {
  NetworkCase net = parse_matpower(kTinyCase, "hinted");
  CHECK(net.name == "tiny");  // explicit function name wins
}

TEST_CASE("packaged cases have the expected shape") {
  const NetworkCase& c30 = load_case("case30.m");
  CHECK(c30.n_buses() == 30);
  CHECK(c30.n_branches() == 41);
  CHECK(c30.n_generators() == 6);
  CHECK(c30.ref_bus() == 1);
  CHECK(c30.total_p_demand() == doctest::Approx(1.8920).epsilon(1e-12));

  const NetworkCase& c39 = load_case("case39.m");
  CHECK(c39.n_buses() == 39);
  CHECK(c39.n_branches() == 46);
  CHECK(c39.n_generators() == 10);
  CHECK(c39.ref_bus() == 31);
  CHECK(c39.total_p_demand() == doctest::Approx(62.5423).epsilon(1e-12));

  const NetworkCase& c118 = load_case("case118.m");
  CHECK(c118.n_buses() == 118);
  CHECK(c118.n_branches() == 186);
  CHECK(c118.n_generators() == 54);
  CHECK(c118.ref_bus() == 69);
  CHECK(c118.total_p_demand() == doctest::Approx(42.42).epsilon(1e-12));
}

TEST_CASE("packaged case spot values") {
  const NetworkCase& c118 = load_case("case118.m");
  const Bus& b1 = c118.bus(1);
  CHECK(b1.role == BusRole::PV);
  CHECK(b1.p_d == doctest::Approx(0.51));
  CHECK(b1.q_d == doctest::Approx(0.27));
  CHECK(b1.vm_init == doctest::Approx(0.955));
  CHECK(b1.va_init == doctest::Approx(10.67 * std::numbers::pi / 180.0));
  CHECK(b1.v_max == doctest::Approx(1.06));
  CHECK(b1.v_min == doctest::Approx(0.94));

  const Generator& g1 = c118.generators[0];
  CHECK(g1.bus == 1);
  CHECK(g1.q_max == doctest::Approx(0.15));
  CHECK(g1.q_min == doctest::Approx(-0.05));
  CHECK(g1.p_max == doctest::Approx(1.0));
  CHECK(g1.v_setpoint == doctest::Approx(0.955));

  const NetworkCase& c30 = load_case("case30.m");
  CHECK(c30.branches[0].r == doctest::Approx(0.02));
  CHECK(c30.branches[0].x == doctest::Approx(0.06));
  CHECK(c30.branches[0].b_charge == doctest::Approx(0.03));
  CHECK(c30.branches[0].rate_a == doctest::Approx(1.3));
  CHECK(c30.generators[0].cost.c2 == doctest::Approx(0.02));
  CHECK(c30.generators[0].cost.c1 == doctest::Approx(3.75));
}

TEST_CASE("piecewise-linear costs are rejected") {
  std::string text(kTinyCase);
  const auto pos = text.find("2	0	0	3	0.01");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 1, "1");
  CHECK_THROWS_AS(parse_matpower(text), UnsupportedCost);
}

TEST_CASE("higher-order polynomial costs are rejected") {
  std::string text(kTinyCase);
  const auto pos = text.find("3	0.01	40	120");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, std::string("3	0.01	40	120").size(), "4	0	0.01	40	120");
  CHECK_THROWS_AS(parse_matpower(text), UnsupportedCost);
}

TEST_CASE("dangling references are rejected") {
  std::string branch_bad(kTinyCase);
  const auto bpos = branch_bad.find("2	3	0.05");
  REQUIRE(bpos != std::string::npos);
  branch_bad.replace(bpos, 3, "2	9");
  CHECK_THROWS_AS(parse_matpower(branch_bad), DanglingReference);

  std::string gen_bad(kTinyCase);
  const auto gpos = gen_bad.find("3	0	0	40	-40");
  REQUIRE(gpos != std::string::npos);
  gen_bad.replace(gpos, 1, "7");
  CHECK_THROWS_AS(parse_matpower(gen_bad), DanglingReference);
}

TEST_CASE("a case without a slack bus is rejected") {
  std::string text(kTinyCase);
  const auto pos = text.find("1	3	0	0");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 4, "1	1	");
  CHECK_THROWS_AS(parse_matpower(text), NoRefBus);
}

TEST_CASE("structurally broken input is rejected") {
  CHECK_THROWS_AS(parse_matpower("function mpc = broken\n"), MalformedCase);
  CHECK_THROWS_AS(parse_matpower(""), MalformedCase);
  std::string text(kTinyCase);
  const auto pos = text.find("mpc.gencost");
  REQUIRE(pos != std::string::npos);
  CHECK_THROWS_AS(parse_matpower(text.substr(0, pos)), MalformedCase);
}

TEST_CASE("missing files raise IoFailure") {
  CHECK_THROWS_AS(load_matpower_file("/nonexistent/case.m"), IoFailure);
}

}  // TEST_SUITE
