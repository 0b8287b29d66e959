#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <doctest.h>

#include <json.hpp>

#include "dc2ac/ac_powerflow.hpp"
#include "dc2ac/dc_dispatch.hpp"
#include "dc2ac/errors.hpp"
#include "dc2ac/feasibility.hpp"

#include "support.hpp"

using namespace dc2ac;

namespace {

// A converged state for the two-bus grid with chosen voltages / outputs.
PowerFlowState make_state(const NetworkCase& net, double vm2, double va2,
                          double pg, double qg) {
  PowerFlowState st;
  st.converged = true;
  st.vm = {1.0, vm2};
  st.va = {0.0, va2};
  st.p_g = {pg};
  st.q_g = {qg};
  st.bus_types = {BusRole::REF, BusRole::PQ};
  st.clamp = {ClampState::Free};
  return st;
}

const char* kRefDoc = R"({
  "case": "two_bus",
  "cost": 500.0,
  "generators": [
    {"bus": 1, "index": 0, "pg_mw": 50.0}
  ]
})";

}  // namespace

TEST_SUITE("feasibility") {

TEST_CASE("clean states report nothing") {
  NetworkCase net = testsupport::two_bus_case();
  PowerFlowState st = make_state(net, 0.98, -0.05, 0.5, 0.2);
  ViolationReport rep = check_violations(net, st);
  CHECK(rep.total_count() == 0);
  CHECK(rep.active.sum_violation == 0.0);
  CHECK(rep.reactive.max_violation == 0.0);
}

TEST_CASE("generator bound excursions are measured") {
  NetworkCase net = testsupport::two_bus_case();
  net.generators[0].p_max = 0.4;
  net.generators[0].q_min = -0.05;
  net.finalize();
  PowerFlowState st = make_state(net, 0.98, -0.05, 0.52, -0.11);
  ViolationReport rep = check_violations(net, st);
  CHECK(rep.active.count == 1);
  CHECK(rep.active.max_violation == doctest::Approx(0.12).epsilon(1e-12));
  CHECK(rep.active.sum_violation == doctest::Approx(0.12).epsilon(1e-12));
  REQUIRE(rep.active.details.size() == 1);
  CHECK(rep.active.details[0].element == 0);
  CHECK(rep.reactive.count == 1);
  CHECK(rep.reactive.max_violation == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(rep.voltage.count == 0);
}

TEST_CASE("voltage band excursions are measured") {
  NetworkCase net = testsupport::two_bus_case();
  PowerFlowState low = make_state(net, 0.85, -0.05, 0.5, 0.2);
  ViolationReport rep = check_violations(net, low);
  CHECK(rep.voltage.count == 1);
  CHECK(rep.voltage.max_violation == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(rep.voltage.details[0].element == 1);

  PowerFlowState high = make_state(net, 1.2, -0.05, 0.5, 0.2);
  CHECK(check_violations(net, high).voltage.max_violation ==
        doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("excursions inside the reporting threshold stay silent") {
  NetworkCase net = testsupport::two_bus_case();
  net.generators[0].q_max = 0.2;
  net.finalize();
  PowerFlowState st = make_state(net, 0.98, -0.05, 0.5, 0.2 + 5e-7);
  CHECK(check_violations(net, st).reactive.count == 0);
  st.q_g[0] = 0.2 + 5e-6;
  CHECK(check_violations(net, st).reactive.count == 1);
}

TEST_CASE("thermal overloads use the larger of the two end flows") {
  NetworkCase net = testsupport::two_bus_case();
  net.branches[0].rate_a = 0.5;
  net.finalize();

  // Independent end-flow computation straight from the impedance.
  const double vm2 = 0.95, va2 = -0.05;
  const std::complex<double> v1(1.0, 0.0);
  const std::complex<double> v2 = std::polar(vm2, va2);
  const std::complex<double> z(0.01, 0.1);
  const std::complex<double> i12 = (v1 - v2) / z;
  const double s_from = std::abs(v1 * std::conj(i12));
  const double s_to = std::abs(v2 * std::conj(-i12));
  const double worst = std::max(s_from, s_to);
  REQUIRE(worst > 0.5);  // the chosen voltages overload the 0.5 rating

  PowerFlowState st = make_state(net, vm2, va2, 0.5, 0.2);
  ViolationReport rep = check_violations(net, st);
  CHECK(rep.thermal.count == 1);
  CHECK(rep.thermal.max_violation ==
        doctest::Approx((worst - 0.5) / 0.5 * 100.0).epsilon(1e-9));
  CHECK(rep.thermal.details[0].element == 0);

  // Unrated or out-of-service branches are never flagged.
  net.branches[0].rate_a = 0.0;
  net.finalize();
  CHECK(check_violations(net, st).thermal.count == 0);
  net.branches[0].rate_a = 0.5;
  net.branches[0].in_service = false;
  net.finalize();
  CHECK(check_violations(net, st).thermal.count == 0);
}

TEST_CASE("unconverged states cannot be scored") {
  NetworkCase net = testsupport::two_bus_case();
  PowerFlowState st = make_state(net, 0.98, -0.05, 0.5, 0.2);
  st.converged = false;
  CHECK_THROWS_AS(check_violations(net, st), NotConverged);
}

TEST_CASE("reference documents parse with unit conversion") {
  ReferenceDispatch ref = parse_reference_json(kRefDoc, 100.0);
  CHECK(ref.source == "two_bus");
  CHECK(ref.cost_ref == doctest::Approx(500.0));
  REQUIRE(ref.gen_index.size() == 1);
  CHECK(ref.gen_bus[0] == 1);
  CHECK(ref.gen_index[0] == 0);
  CHECK(ref.p_g_ref[0] == doctest::Approx(0.5).epsilon(1e-12));

  NetworkCase net = testsupport::two_bus_case();
  CHECK_NOTHROW(validate_reference(net, ref));
}

TEST_CASE("malformed reference documents are rejected") {
  CHECK_THROWS_AS(parse_reference_json("not json", 100.0), MalformedCase);
  CHECK_THROWS_AS(parse_reference_json("{}", 100.0), MalformedCase);
  CHECK_THROWS_AS(parse_reference_json(R"({"case":"x","cost":1})", 100.0),
                  MalformedCase);
  CHECK_THROWS_AS(load_reference_file("/nonexistent/ref.json", 100.0),
                  IoFailure);
}

TEST_CASE("references must match the case") {
  NetworkCase net = testsupport::two_bus_case();

  ReferenceDispatch bad_index = parse_reference_json(kRefDoc, 100.0);
  bad_index.gen_index[0] = 5;
  CHECK_THROWS_AS(validate_reference(net, bad_index), DimensionMismatch);

  ReferenceDispatch bad_bus = parse_reference_json(kRefDoc, 100.0);
  bad_bus.gen_bus[0] = 2;
  CHECK_THROWS_AS(validate_reference(net, bad_bus), DimensionMismatch);

  // Every in-service generator needs an entry.
  NetworkCase two = testsupport::two_bus_case();
  Generator extra;
  extra.bus = 2;
  extra.p_max = 1.0;
  two.generators.push_back(extra);
  two.finalize();
  ReferenceDispatch partial = parse_reference_json(kRefDoc, 100.0);
  CHECK_THROWS_AS(validate_reference(two, partial), DimensionMismatch);
}

TEST_CASE("mean absolute error by hand") {
  ReferenceDispatch ref;
  ref.gen_bus = {1, 2};
  ref.gen_index = {0, 1};
  ref.p_g_ref = {0.4, 0.1};
  ref.cost_ref = 100.0;
  const std::vector<double> p = {0.5, 0.3};
  CHECK(compute_mae(p, ref) == doctest::Approx(0.15).epsilon(1e-15));

  ReferenceDispatch empty;
  CHECK_THROWS_AS(compute_mae(p, empty), DimensionMismatch);
  ReferenceDispatch out_of_range = ref;
  out_of_range.gen_index[1] = 7;
  CHECK_THROWS_AS(compute_mae(p, out_of_range), DimensionMismatch);
}

TEST_CASE("cost difference by hand") {
  ReferenceDispatch ref;
  ref.cost_ref = 100.0;
  CHECK(compute_cost_difference(110.0, ref) == doctest::Approx(10.0));
  CHECK(compute_cost_difference(90.0, ref) == doctest::Approx(10.0));
  CHECK(compute_cost_difference(100.0, ref) == doctest::Approx(0.0));
  ref.cost_ref = 0.0;
  CHECK_THROWS_AS(compute_cost_difference(50.0, ref), ZeroReferenceCost);
}

TEST_CASE("dispatch cost sums the unit curves in megawatts") {
  NetworkCase net = testsupport::three_bus_case();
  net.generators[0].cost = {0.01, 40.0, 120.0};
  net.finalize();
  // 0.7 p.u. = 70 MW on the quadratic curve plus 0.6 p.u. on the 50 $/MWh one.
  const double expect = (0.01 * 70.0 * 70.0 + 40.0 * 70.0 + 120.0) + 50.0 * 60.0;
  CHECK(dispatch_cost(net, {0.7, 0.6}) == doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(dispatch_cost(net, {0.7}), DimensionMismatch);
}

TEST_CASE("report serialization") {
  NetworkCase net = testsupport::two_bus_case();
  net.generators[0].p_max = 0.4;
  net.finalize();
  PowerFlowState st = make_state(net, 0.85, -0.05, 0.52, 0.2);
  ViolationReport rep = check_violations(net, st);

  const nlohmann::json j = nlohmann::json::parse(violations_to_json(rep));
  CHECK(j.at("active").at("count") == 1);
  CHECK(j.at("voltage").at("count") == 1);
  CHECK(j.at("active").at("max").get<double>() ==
        doctest::Approx(0.12).epsilon(1e-9));
  CHECK(j.at("active").at("details").size() == 1);

  const std::string csv = violations_to_csv_rows("base", "spf", rep);
  CHECK(csv.find("base,spf,active,1,") != std::string::npos);
  CHECK(csv.find("base,spf,reactive,0,") != std::string::npos);
  CHECK(csv.find("base,spf,voltage,1,") != std::string::npos);
  CHECK(csv.find("base,spf,thermal,0,") != std::string::npos);
}

}  // TEST_SUITE
