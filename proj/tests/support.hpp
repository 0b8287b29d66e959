#pragma once

// Shared fixtures for the test suites: paths into the data directory and a
// few tiny hand-sized networks whose solutions are known in closed form.

#include <map>
#include <string>

#include "dc2ac/matpower.hpp"
#include "dc2ac/network.hpp"

namespace testsupport {

inline std::string data_path(const std::string& name) {
  return std::string(DC2AC_DATA_DIR) + "/" + name;
}

// Loads a packaged case once per process.
inline const dc2ac::NetworkCase& load_case(const std::string& name) {
  static std::map<std::string, dc2ac::NetworkCase> cache;
  auto it = cache.find(name);
  if (it == cache.end())
    it = cache.emplace(name, dc2ac::load_matpower_file(data_path(name))).first;
  return it->second;
}

// One generator at the slack feeding 0.5 + j0.2 p.u. over z = 0.01 + j0.1.
// The exact AC solution follows from the scalar fixed point
// V2 = 1 - z * conj(S / V2).
inline dc2ac::NetworkCase two_bus_case() {
  dc2ac::NetworkCase net;
  net.name = "two_bus";
  dc2ac::Bus b1;
  b1.id = 1;
  b1.role = dc2ac::BusRole::REF;
  dc2ac::Bus b2;
  b2.id = 2;
  b2.p_d = 0.5;
  b2.q_d = 0.2;
  net.buses = {b1, b2};
  dc2ac::Branch br;
  br.from_bus = 1;
  br.to_bus = 2;
  br.r = 0.01;
  br.x = 0.1;
  net.branches = {br};
  dc2ac::Generator g;
  g.bus = 1;
  g.p_max = 10.0;
  g.q_min = -10.0;
  g.q_max = 10.0;
  g.cost.c1 = 10.0;
  net.generators = {g};
  net.finalize();
  return net;
}

// Same grid with a purely active 0.5 p.u. load, for the DC dispatch tests.
// With line resistance 0.01 the loss-aware dispatches solve in closed form:
//   p = 0.5 + 0.01 p^2      (quadratic loss model)
//   0.99 p = 0.4975         (single tangent cut at the lossless flow 0.5)
inline dc2ac::NetworkCase two_bus_dc_case() {
  dc2ac::NetworkCase net = two_bus_case();
  net.buses[1].q_d = 0.0;
  net.finalize();
  return net;
}

// Symmetric triangle (all x = 0.1): generator A (10 $/MWh) at bus 1,
// B (50 $/MWh) at bus 2, 1.3 p.u. of load at bus 3. The 1-3 line is rated
// at exactly 2/3, so the cheap unit is curtailed to
//   (p_A + 1.3) / 3 = 2/3  =>  p_A = 0.7,  p_B = 0.6,  cost 3700 $/h.
inline dc2ac::NetworkCase three_bus_case() {
  dc2ac::NetworkCase net;
  net.name = "three_bus";
  dc2ac::Bus b1;
  b1.id = 1;
  b1.role = dc2ac::BusRole::REF;
  dc2ac::Bus b2;
  b2.id = 2;
  dc2ac::Bus b3;
  b3.id = 3;
  b3.p_d = 1.3;
  net.buses = {b1, b2, b3};
  dc2ac::Branch b12;
  b12.from_bus = 1;
  b12.to_bus = 2;
  b12.x = 0.1;
  dc2ac::Branch b13;
  b13.from_bus = 1;
  b13.to_bus = 3;
  b13.x = 0.1;
  b13.rate_a = 2.0 / 3.0;
  dc2ac::Branch b23;
  b23.from_bus = 2;
  b23.to_bus = 3;
  b23.x = 0.1;
  net.branches = {b12, b13, b23};
  dc2ac::Generator ga;
  ga.bus = 1;
  ga.p_max = 2.0;
  ga.cost.c1 = 10.0;
  dc2ac::Generator gb;
  gb.bus = 2;
  gb.p_max = 2.0;
  gb.cost.c1 = 50.0;
  net.generators = {ga, gb};
  net.finalize();
  return net;
}

}  // namespace testsupport
