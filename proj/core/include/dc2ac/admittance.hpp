#pragma once

#include <complex>
#include <vector>

#include <Eigen/SparseCore>

#include "dc2ac/network.hpp"

namespace dc2ac {

// Complex bus admittance matrix plus the per-branch two-port admittances
// needed to recover individual branch flows. Entries for out-of-service
// branches are zero.
struct AdmittanceMatrix {
  Eigen::SparseMatrix<std::complex<double>> ybus;  // n x n
  std::vector<std::complex<double>> yff, yft, ytf, ytt;  // per branch
};

// Builds the bus admittance matrix with the standard pi model, off-nominal
// taps on the from side, phase shifts, line charging split half per end and
// bus shunts on the diagonal. Throws SingularBranch for an in-service branch
// with zero series impedance.
AdmittanceMatrix build_admittance(const NetworkCase& net);

}  // namespace dc2ac
