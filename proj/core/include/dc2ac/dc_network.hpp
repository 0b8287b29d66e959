#pragma once

#include <Eigen/Dense>

#include "dc2ac/network.hpp"

namespace dc2ac {

// Power transfer distribution factors: maps bus injections (p.u.) to branch
// flows under the DC approximation, with the slack column identically zero.
// Rows follow the case branch order; rows for out-of-service branches are
// zero. shift_flow holds the constant flow offsets caused by phase shifters,
// so that  flow = phi * injections + shift_flow.
struct PtdfMatrix {
  Eigen::MatrixXd phi;        // n_branches x n_buses
  Eigen::VectorXd shift_flow; // n_branches
  int slack_bus = 0;          // external id
};

// DC series susceptance 1/(x * tap) of a branch; throws SingularBranch if
// the reactance is zero.
double dc_susceptance(const Branch& br);

// Verifies the in-service branch graph connects all buses; throws
// IslandedNetwork naming an unreachable bus otherwise.
void check_connected(const NetworkCase& net);

// Solves B * theta = injections for bus angles with the slack angle fixed to
// zero. The injection imbalance is absorbed at the slack bus. Phase shifts
// enter as equivalent injections.
Eigen::VectorXd dc_angles(const NetworkCase& net, const Eigen::VectorXd& injections,
                          int slack_bus);

// Branch flows b * (theta_f - theta_t - shift) for all branches (zero when
// out of service).
Eigen::VectorXd dc_flows(const NetworkCase& net, const Eigen::VectorXd& theta);

PtdfMatrix build_ptdf(const NetworkCase& net, int slack_bus);

}  // namespace dc2ac
