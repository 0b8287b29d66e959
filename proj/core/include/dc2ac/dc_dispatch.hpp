#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dc2ac/network.hpp"

namespace dc2ac {

enum class DcVariant { Base, Lllf, Lqcp, Lloa };

std::string to_string(DcVariant v);
DcVariant dc_variant_from_string(const std::string& s);

// Result of one DC dispatch. All quantities are p.u. except objective ($/h).
// Vectors are sized to the full case (out-of-service elements zero).
struct DcSolution {
  DcVariant loss_model = DcVariant::Base;
  std::vector<double> p_g_sp;      // per generator active setpoint
  std::vector<double> theta_dc;    // per bus angle, rad
  std::vector<double> flow_fwd;    // per branch from->to flow
  std::vector<double> flow_rev;    // per branch to->from flow
  double modeled_losses = 0.0;     // total losses the model accounted for
  double objective = 0.0;          // generation cost, $/h
};

// Linear loss factors derived from a reference dispatch: total losses are
// approximated as ell_ref + lambda' * (injections - injections_ref).
struct LossFactors {
  Eigen::VectorXd lambda;     // per bus
  double ell_ref = 0.0;
  Eigen::VectorXd ref_flows;  // per branch, the linearization point
};

// Lossless quadratic-cost dispatch over generator outputs and bus angles
// with per-branch flow limits. Throws InfeasibleDispatch when the load
// cannot be met within limits and SolverFailure on solver breakdown.
DcSolution solve_dc_base(const NetworkCase& net);

// Loss factors at the given reference dispatch, built from the PTDF with
// the given slack bus.
LossFactors compute_loss_factors(const NetworkCase& net, const DcSolution& reference,
                                 int slack_bus);

// Dispatch with the linearized loss load ell_ref + lambda'*(p - p_ref) added
// to the balance; flows via PTDF.
DcSolution solve_dc_lllf(const NetworkCase& net, const LossFactors& factors);

// Dispatch with per-branch losses modeled through forward/reverse flow
// variables and an iteratively accumulated set of tangent cuts. Cuts are
// added at the current flows each round until total losses change by less
// than tol_loss (relative); throws CutLoopDiverged if max_rounds is reached.
DcSolution solve_dc_lqcp(const NetworkCase& net, double tol_loss = 1e-8,
                         int max_rounds = 50);

// Same model as solve_dc_lqcp but with a single tangent cut per branch taken
// at the reference solution's flows; no iteration.
DcSolution solve_dc_lloa(const NetworkCase& net, const DcSolution& reference);

// Convenience dispatcher. Lllf and Lloa need a Base reference; when
// base_reference is null one is solved internally.
DcSolution solve_dc(const NetworkCase& net, DcVariant variant,
                    const DcSolution* base_reference = nullptr);

// JSON document with the per-generator setpoints (MW) and the objective,
// suitable as a dispatch reference for error metrics.
std::string dc_solution_to_json(const NetworkCase& net, const DcSolution& sol);

}  // namespace dc2ac
