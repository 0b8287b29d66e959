#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dc2ac/dc_dispatch.hpp"
#include "dc2ac/network.hpp"

namespace dc2ac {

enum class AcVariant { Base, Bts, Ds, Spf };

std::string to_string(AcVariant v);
AcVariant ac_variant_from_string(const std::string& s);

enum class WarmStart { Flat, FromState };

struct SolverOptions {
  double tol = 1e-6;       // mismatch infinity-norm tolerance, p.u.
  double eps_q = 1e-4;     // reactive-limit deadband, p.u.
  double eps_v = 1e-5;     // voltage deadband for PQ->PV reversion, p.u.
  int max_inner = 30;      // Newton iterations per solve
  int max_outer = 50;      // type-switching rounds
  WarmStart warm_start = WarmStart::Flat;
  bool use_case_vsetpoints = false;  // false: hold regulated buses at 1.0
  // Refresh participation factors from the current dispatch inside every
  // Newton iteration instead of once per switching round.
  bool reparticipate_each_iteration = false;
};

enum class SlackMode { Headroom, CapacityFallback, SingleSlack };

// Participation factors distributing the total loss adjustment across
// generators: p_g = setpoint_g + pi_g * ell_tot.
struct SlackAllocation {
  std::vector<double> pi;  // per generator, sums to 1 over in-service units
  double ell_tot = 0.0;    // p.u.
  SlackMode mode = SlackMode::SingleSlack;
};

enum class ClampState { Free, AtQmax, AtQmin };

struct PowerFlowState {
  bool converged = false;
  int inner_iters = 0;  // Newton iterations, summed over all rounds
  int outer_iters = 0;  // solves performed (1 when no switching occurs)
  std::vector<double> vm, va;          // per bus
  std::vector<double> p_g, q_g;        // per generator, p.u.
  std::vector<BusRole> bus_types;      // final type assignment
  std::vector<ClampState> clamp;       // per generator
  SlackAllocation allocation;
  std::vector<double> residual_history;  // mismatch norm per inner iteration
};

// Headroom-proportional participation factors. Falls back to capacity
// shares when no in-service generator has headroom above its setpoint.
SlackAllocation distribute_slack(const std::vector<Generator>& gens,
                                 const std::vector<double>& setpoints,
                                 double ell_tot);

// Outcome of one reactive-limit switching round applied to a solved state.
struct SwitchOutcome {
  std::vector<BusRole> bus_types;
  std::vector<ClampState> clamp;
  int changes = 0;
};

SwitchOutcome switching_round(const NetworkCase& net, const PowerFlowState& state,
                              const SolverOptions& opts);

// Newton-Raphson power flow starting from the DC setpoints.
//   Base: single slack at the reference bus, no reactive-limit handling.
//   Bts:  Base plus PV/PQ switching with clamped reactive output.
//   Ds:   distributed slack via participation factors, no switching.
//   Spf:  distributed slack plus switching.
// `initial` seeds voltages when opts.warm_start == FromState. Throws
// Diverged / SwitchLimit / SingularJacobian / MissingReference.
PowerFlowState run_acpf(const NetworkCase& net, const DcSolution& dispatch,
                        AcVariant variant, const SolverOptions& opts = {},
                        const PowerFlowState* initial = nullptr);

// Mismatch vector of the state under its own equation set: active power at
// every non-reference bus (plus the reference bus under distributed slack),
// then reactive power at PQ buses. Converged states give entries below tol.
Eigen::VectorXd compute_mismatch(const NetworkCase& net, const PowerFlowState& state);

std::string state_to_json(const NetworkCase& net, const PowerFlowState& state);

}  // namespace dc2ac
