#include "dc2ac/admittance.hpp"

#include <cmath>
#include <vector>

#include <Eigen/SparseCore>

#include "dc2ac/errors.hpp"

namespace dc2ac {

AdmittanceMatrix build_admittance(const NetworkCase& net) {
  using cplx = std::complex<double>;
  const int n = static_cast<int>(net.n_buses());
  const int e = static_cast<int>(net.n_branches());

  AdmittanceMatrix adm;
  adm.yff.assign(e, cplx(0.0, 0.0));
  adm.yft.assign(e, cplx(0.0, 0.0));
  adm.ytf.assign(e, cplx(0.0, 0.0));
  adm.ytt.assign(e, cplx(0.0, 0.0));

  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(4 * e + n);

  for (int k = 0; k < e; ++k) {
    const Branch& br = net.branches[k];
    if (!br.in_service) continue;
    if (br.r == 0.0 && br.x == 0.0)
      throw SingularBranch("branch " + std::to_string(br.from_bus) + "-" +
                           std::to_string(br.to_bus) + " has zero impedance");
    const cplx ys = 1.0 / cplx(br.r, br.x);
    const cplx ych(0.0, br.b_charge / 2.0);
    const cplx tap = std::polar(br.tap, br.shift);

    adm.ytt[k] = ys + ych;
    adm.yff[k] = (ys + ych) / (br.tap * br.tap);
    adm.yft[k] = -ys / std::conj(tap);
    adm.ytf[k] = -ys / tap;

    const int f = net.bus_index(br.from_bus);
    const int t = net.bus_index(br.to_bus);
    trip.emplace_back(f, f, adm.yff[k]);
    trip.emplace_back(f, t, adm.yft[k]);
    trip.emplace_back(t, f, adm.ytf[k]);
    trip.emplace_back(t, t, adm.ytt[k]);
  }
  for (int i = 0; i < n; ++i) {
    const Bus& b = net.buses[i];
    if (b.gs != 0.0 || b.bs != 0.0) trip.emplace_back(i, i, cplx(b.gs, b.bs));
  }

  adm.ybus.resize(n, n);
  adm.ybus.setFromTriplets(trip.begin(), trip.end());
  return adm;
}

}  // namespace dc2ac
