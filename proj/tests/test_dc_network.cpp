#include <doctest.h>

#include <Eigen/Dense>

#include "dc2ac/dc_network.hpp"
#include "dc2ac/errors.hpp"

#include "support.hpp"

using namespace dc2ac;

TEST_SUITE("dc_network") {

TEST_CASE("series susceptance") {
  Branch br;
  br.x = 0.1;
  CHECK(dc_susceptance(br) == doctest::Approx(10.0));
  br.tap = 2.0;
  CHECK(dc_susceptance(br) == doctest::Approx(5.0));
  br.x = 0.0;
  CHECK_THROWS_AS(dc_susceptance(br), SingularBranch);
}

TEST_CASE("connectivity check") {
  NetworkCase net = testsupport::three_bus_case();
  CHECK_NOTHROW(check_connected(net));
  net.branches[0].in_service = false;  // 1-2
  net.branches[2].in_service = false;  // 2-3
  net.finalize();
  CHECK_THROWS_AS(check_connected(net), IslandedNetwork);
}

TEST_CASE("two-bus angles and flows") {
  NetworkCase net = testsupport::two_bus_dc_case();
  Eigen::Vector2d inj(0.5, -0.5);
  Eigen::VectorXd theta = dc_angles(net, inj, 1);
  CHECK(theta[0] == 0.0);
  CHECK(theta[1] == doctest::Approx(-0.05).epsilon(1e-12));
  Eigen::VectorXd flows = dc_flows(net, theta);
  CHECK(flows[0] == doctest::Approx(0.5).epsilon(1e-12));

  // Any imbalance lands on the slack: only non-slack injections matter.
  Eigen::Vector2d lopsided(3.0, -0.5);
  Eigen::VectorXd theta2 = dc_angles(net, lopsided, 1);
  CHECK(theta2[1] == doctest::Approx(-0.05).epsilon(1e-12));
}

TEST_CASE("phase shift offsets a radial branch without driving flow") {
  NetworkCase net = testsupport::two_bus_dc_case();
  net.branches[0].shift = 0.02;
  net.finalize();
  Eigen::VectorXd theta = dc_angles(net, Eigen::Vector2d::Zero(), 1);
  CHECK(theta[1] == doctest::Approx(-0.02).epsilon(1e-12));
  CHECK(dc_flows(net, theta)[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("phase shift circulates flow around a loop") {
  // Equal susceptances b = 10 and a 0.03 rad shift on branch 1-2 push
  // b*shift/3 = 0.1 around the triangle.
  NetworkCase net = testsupport::three_bus_case();
  net.branches[0].shift = 0.03;
  net.finalize();
  Eigen::VectorXd theta = dc_angles(net, Eigen::Vector3d::Zero(), 1);
  Eigen::VectorXd flows = dc_flows(net, theta);
  CHECK(flows[0] == doctest::Approx(-0.1).epsilon(1e-10));
  CHECK(flows[1] == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(flows[2] == doctest::Approx(-0.1).epsilon(1e-10));

  PtdfMatrix ptdf = build_ptdf(net, 1);
  CHECK(ptdf.shift_flow[0] == doctest::Approx(-0.1).epsilon(1e-10));
  CHECK(ptdf.shift_flow[1] == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(ptdf.shift_flow[2] == doctest::Approx(-0.1).epsilon(1e-10));
}

TEST_CASE("triangle distribution factors") {
  NetworkCase net = testsupport::three_bus_case();
  PtdfMatrix ptdf = build_ptdf(net, 3);
  CHECK(ptdf.slack_bus == 3);
  // Unit injection at bus 1 (withdrawn at the slack, bus 3).
  CHECK(ptdf.phi(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(ptdf.phi(1, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(ptdf.phi(2, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // Unit injection at bus 2.
  CHECK(ptdf.phi(0, 1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(ptdf.phi(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(ptdf.phi(2, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  // Slack column is identically zero.
  CHECK(ptdf.phi.col(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ptdf.shift_flow.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("out-of-service branches have zero factor rows") {
  NetworkCase net = testsupport::three_bus_case();
  net.branches[2].in_service = false;  // 2-3 off: radial 2-1-3 remains
  net.finalize();
  PtdfMatrix ptdf = build_ptdf(net, 3);
  CHECK(ptdf.phi.row(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ptdf.phi(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(ptdf.phi(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("factors agree with a direct angle solve on a real case") {
  const NetworkCase& net = testsupport::load_case("case30.m");
  const int n = static_cast<int>(net.n_buses());
  Eigen::VectorXd inj = Eigen::VectorXd::Zero(n);
  // An arbitrary balanced injection pattern.
  for (int i = 0; i < n; ++i) inj[i] = (i % 2 ? 0.03 : -0.03) * (1 + i % 5);
  inj[net.ref_index()] -= inj.sum();

  PtdfMatrix ptdf = build_ptdf(net, net.ref_bus());
  Eigen::VectorXd via_ptdf = ptdf.phi * inj + ptdf.shift_flow;
  Eigen::VectorXd via_angles = dc_flows(net, dc_angles(net, inj, net.ref_bus()));
  CHECK((via_ptdf - via_angles).cwiseAbs().maxCoeff() < 1e-9);
}

}  // TEST_SUITE
