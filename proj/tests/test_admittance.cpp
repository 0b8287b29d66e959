#include <complex>

#include <doctest.h>

#include "dc2ac/admittance.hpp"
#include "dc2ac/errors.hpp"

#include "support.hpp"

using namespace dc2ac;
using cplx = std::complex<double>;

namespace {

double cerr_abs(cplx a, cplx b) { return std::abs(a - b); }

}  // namespace

TEST_SUITE("admittance") {

TEST_CASE("plain series branch") {
  NetworkCase net = testsupport::two_bus_case();
  AdmittanceMatrix adm = build_admittance(net);
  const cplx y = 1.0 / cplx(0.01, 0.1);
  CHECK(y.real() == doctest::Approx(0.01 / 0.0101).epsilon(1e-14));
  CHECK(y.imag() == doctest::Approx(-0.1 / 0.0101).epsilon(1e-14));

  CHECK(cerr_abs(adm.yff[0], y) < 1e-14);
  CHECK(cerr_abs(adm.ytt[0], y) < 1e-14);
  CHECK(cerr_abs(adm.yft[0], -y) < 1e-14);
  CHECK(cerr_abs(adm.ytf[0], -y) < 1e-14);

  REQUIRE(adm.ybus.rows() == 2);
  CHECK(cerr_abs(adm.ybus.coeff(0, 0), y) < 1e-14);
  CHECK(cerr_abs(adm.ybus.coeff(0, 1), -y) < 1e-14);
  CHECK(cerr_abs(adm.ybus.coeff(1, 0), -y) < 1e-14);
  CHECK(cerr_abs(adm.ybus.coeff(1, 1), y) < 1e-14);
}

TEST_CASE("charging splits half per end and shunts land on the diagonal") {
  NetworkCase net = testsupport::two_bus_case();
  net.branches[0].b_charge = 0.04;
  net.buses[0].gs = 0.05;
  net.buses[0].bs = -0.25;
  net.finalize();
  AdmittanceMatrix adm = build_admittance(net);
  const cplx y = 1.0 / cplx(0.01, 0.1);
  const cplx half(0.0, 0.02);
  CHECK(cerr_abs(adm.yff[0], y + half) < 1e-14);
  CHECK(cerr_abs(adm.ytt[0], y + half) < 1e-14);
  CHECK(cerr_abs(adm.ybus.coeff(0, 0), y + half + cplx(0.05, -0.25)) < 1e-14);
  CHECK(cerr_abs(adm.ybus.coeff(1, 1), y + half) < 1e-14);
}

TEST_CASE("off-nominal tap and phase shift") {
  NetworkCase net = testsupport::two_bus_case();
  net.branches[0].tap = 1.05;
  net.branches[0].shift = 0.1;
  net.finalize();
  AdmittanceMatrix adm = build_admittance(net);
  const cplx y = 1.0 / cplx(0.01, 0.1);
  const cplx tap = std::polar(1.05, 0.1);
  CHECK(cerr_abs(adm.yff[0], y / (1.05 * 1.05)) < 1e-14);
  CHECK(cerr_abs(adm.ytt[0], y) < 1e-14);
  CHECK(cerr_abs(adm.yft[0], -y / std::conj(tap)) < 1e-14);
  CHECK(cerr_abs(adm.ytf[0], -y / tap) < 1e-14);
  // The asymmetric shift makes ybus non-symmetric.
  CHECK(std::abs(adm.ybus.coeff(0, 1) - adm.ybus.coeff(1, 0)) > 1e-3);
}

TEST_CASE("out-of-service branches contribute nothing") {
  NetworkCase net = testsupport::three_bus_case();
  net.branches[2].in_service = false;
  net.finalize();
  AdmittanceMatrix adm = build_admittance(net);
  CHECK(adm.yff[2] == cplx(0.0, 0.0));
  CHECK(adm.yft[2] == cplx(0.0, 0.0));
  CHECK(std::abs(adm.ybus.coeff(1, 2)) == 0.0);
}

TEST_CASE("zero-impedance in-service branch is rejected") {
  NetworkCase net = testsupport::two_bus_case();
  net.branches[0].r = 0.0;
  net.branches[0].x = 0.0;
  net.finalize();
  CHECK_THROWS_AS(build_admittance(net), SingularBranch);
}

TEST_CASE("row sums vanish for a pure series network") {
  // With no charging or shunts each row of ybus sums to zero.
  NetworkCase net = testsupport::three_bus_case();
  AdmittanceMatrix adm = build_admittance(net);
  for (int i = 0; i < 3; ++i) {
    cplx sum(0.0, 0.0);
    for (int j = 0; j < 3; ++j) sum += adm.ybus.coeff(i, j);
    CHECK(std::abs(sum) < 1e-12);
  }
}

}  // TEST_SUITE
