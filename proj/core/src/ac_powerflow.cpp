#include "dc2ac/ac_powerflow.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <json.hpp>

#include "dc2ac/admittance.hpp"
#include "dc2ac/dc_network.hpp"
#include "dc2ac/errors.hpp"

namespace dc2ac {
namespace {

struct Injections {
  Eigen::VectorXd p, q;
};

Injections calc_injections(const Eigen::SparseMatrix<std::complex<double>>& ybus,
                           const std::vector<double>& vm,
                           const std::vector<double>& va) {
  const int n = static_cast<int>(vm.size());
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = std::polar(vm[i], va[i]);
  const Eigen::VectorXcd s = v.cwiseProduct((ybus * v).conjugate());
  return {s.real(), s.imag()};
}

// Everything fixed for the duration of one run_acpf call.
struct Setup {
  const NetworkCase* net = nullptr;
  AdmittanceMatrix adm;
  int n = 0;
  int refi = -1;
  bool distributed = false;
  bool switching = false;
  std::vector<double> psp;    // per generator, p.u.
  std::vector<double> qfix;   // per generator: fixed q for gens at PQ-role buses
  std::vector<double> vsp;    // per bus; meaningful for voltage-holding buses
  std::vector<double> pd, qd;
};

Setup make_setup(const NetworkCase& net, const DcSolution& dispatch,
                 AcVariant variant, const SolverOptions& opts) {
  if (dispatch.p_g_sp.size() != net.n_generators())
    throw MissingReference("dispatch setpoints do not match the case");
  check_connected(net);

  Setup su;
  su.net = &net;
  su.adm = build_admittance(net);
  su.n = static_cast<int>(net.n_buses());
  su.refi = net.ref_index();
  su.distributed = variant == AcVariant::Ds || variant == AcVariant::Spf;
  su.switching = variant == AcVariant::Bts || variant == AcVariant::Spf;
  su.psp = dispatch.p_g_sp;

  su.qfix.assign(net.n_generators(), 0.0);
  for (std::size_t g = 0; g < net.n_generators(); ++g) {
    const Generator& gen = net.generators[g];
    if (gen.in_service &&
        net.buses[net.bus_index(gen.bus)].role == BusRole::PQ)
      su.qfix[g] = gen.q_g;
  }

  su.vsp.assign(su.n, 1.0);
  su.pd.resize(su.n);
  su.qd.resize(su.n);
  for (int i = 0; i < su.n; ++i) {
    const Bus& b = net.buses[i];
    su.pd[i] = b.p_d;
    su.qd[i] = b.q_d;
    if (b.role != BusRole::PQ && opts.use_case_vsetpoints) {
      const auto& gl = net.generators_at(i);
      if (!gl.empty()) su.vsp[i] = net.generators[gl.front()].v_setpoint;
    }
  }

  if (!su.distributed) {
    bool ref_has_gen = !net.generators_at(su.refi).empty();
    if (!ref_has_gen)
      throw MissingReference("reference bus " + std::to_string(net.ref_bus()) +
                             " has no in-service generator to absorb mismatch");
  }
  return su;
}

// Single-slack participation: reference-bus generators by capacity share.
SlackAllocation single_slack_allocation(const Setup& su) {
  SlackAllocation alloc;
  alloc.mode = SlackMode::SingleSlack;
  alloc.pi.assign(su.net->n_generators(), 0.0);
  const auto& gl = su.net->generators_at(su.refi);
  double cap = 0.0;
  for (int g : gl) cap += su.net->generators[g].p_max;
  for (int g : gl)
    alloc.pi[g] = cap > 0.0 ? su.net->generators[g].p_max / cap
                            : 1.0 / static_cast<double>(gl.size());
  return alloc;
}

// Reactive allocation at a voltage-controlled bus: every free generator sits
// at the same relative position within its [q_min, q_max] range.
void allocate_bus_q(const NetworkCase& net, const std::vector<int>& free_gens,
                    double q_total, std::vector<double>* q_g) {
  if (free_gens.empty()) return;
  if (free_gens.size() == 1) {
    (*q_g)[free_gens[0]] = q_total;
    return;
  }
  double lo = 0.0, range = 0.0;
  for (int g : free_gens) {
    lo += net.generators[g].q_min;
    range += net.generators[g].q_max - net.generators[g].q_min;
  }
  if (range > 0.0) {
    const double t = (q_total - lo) / range;
    for (int g : free_gens)
      (*q_g)[g] = net.generators[g].q_min +
                  t * (net.generators[g].q_max - net.generators[g].q_min);
  } else {
    const double share = (q_total - lo) / static_cast<double>(free_gens.size());
    for (int g : free_gens) (*q_g)[g] = net.generators[g].q_min + share;
  }
}

struct NewtonResult {
  int iterations = 0;
};

// Solves the current round's equations in place; appends residual norms.
NewtonResult newton_solve(const Setup& su, const SolverOptions& opts,
                          PowerFlowState* st) {
  const NetworkCase& net = *su.net;
  const int n = su.n;

  std::vector<int> row_p(n, -1), row_q(n, -1), col_va(n, -1), col_vm(n, -1);
  int rows = 0;
  for (int i = 0; i < n; ++i)
    if (i != su.refi || su.distributed) row_p[i] = rows++;
  for (int i = 0; i < n; ++i)
    if (st->bus_types[i] == BusRole::PQ) row_q[i] = rows++;
  int cols = 0;
  for (int i = 0; i < n; ++i)
    if (i != su.refi) col_va[i] = cols++;
  for (int i = 0; i < n; ++i)
    if (st->bus_types[i] == BusRole::PQ) col_vm[i] = cols++;
  const int col_ell = su.distributed ? cols++ : -1;
  if (rows != cols)
    throw SingularJacobian("equation/unknown count mismatch (" +
                           std::to_string(rows) + " vs " + std::to_string(cols) + ")");

  // Per-bus fixed injection specs and participation sums.
  std::vector<double> pspec(n), qspec(n), pi_bus(n, 0.0);
  auto refresh_spec = [&]() {
    for (int i = 0; i < n; ++i) {
      pspec[i] = -su.pd[i];
      qspec[i] = -su.qd[i];
      pi_bus[i] = 0.0;
    }
    for (std::size_t g = 0; g < net.n_generators(); ++g) {
      const Generator& gen = net.generators[g];
      if (!gen.in_service) continue;
      const int bi = net.bus_index(gen.bus);
      pspec[bi] += su.psp[g];
      pi_bus[bi] += st->allocation.pi[g];
      switch (st->clamp[g]) {
        case ClampState::Free:
          if (net.buses[bi].role == BusRole::PQ) qspec[bi] += su.qfix[g];
          break;
        case ClampState::AtQmax: qspec[bi] += gen.q_max; break;
        case ClampState::AtQmin: qspec[bi] += gen.q_min; break;
      }
    }
  };
  refresh_spec();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int it = 0;; ++it) {
    if (su.distributed && opts.reparticipate_each_iteration) {
      std::vector<double> pg(net.n_generators(), 0.0);
      for (std::size_t g = 0; g < net.n_generators(); ++g)
        pg[g] = su.psp[g] + st->allocation.pi[g] * st->allocation.ell_tot;
      const double ell = st->allocation.ell_tot;
      st->allocation = distribute_slack(net.generators, pg, ell);
      refresh_spec();
    }

    const Injections inj = calc_injections(su.adm.ybus, st->vm, st->va);
    Eigen::VectorXd mism(rows);
    for (int i = 0; i < n; ++i) {
      if (row_p[i] >= 0)
        mism[row_p[i]] = pspec[i] +
                         (su.distributed ? pi_bus[i] * st->allocation.ell_tot : 0.0) -
                         inj.p[i];
      if (row_q[i] >= 0) mism[row_q[i]] = qspec[i] - inj.q[i];
    }
    const double norm = rows ? mism.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(norm)) throw Diverged("mismatch is not finite");
    st->residual_history.push_back(norm);

    if (norm <= opts.tol) return {it};
    if (it >= opts.max_inner) {
      const double first = st->residual_history[st->residual_history.size() - 1 - it];
      throw Diverged("no convergence in " + std::to_string(opts.max_inner) +
                     " iterations (mismatch " +
                     std::string(norm > first ? "growing" : "stalled") + " at " +
                     std::to_string(norm) + ")");
    }

    // Polar Jacobian of (calculated - specified) power.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(su.adm.ybus.nonZeros() * 4 + n);
    for (int j = 0; j < su.adm.ybus.outerSize(); ++j) {
      for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator itY(su.adm.ybus, j);
           itY; ++itY) {
        const int i = static_cast<int>(itY.row());
        const double g = itY.value().real();
        const double b = itY.value().imag();
        double dp_dth, dp_dvm, dq_dth, dq_dvm;
        if (i == j) {
          dp_dth = -inj.q[i] - b * st->vm[i] * st->vm[i];
          dp_dvm = inj.p[i] / st->vm[i] + g * st->vm[i];
          dq_dth = inj.p[i] - g * st->vm[i] * st->vm[i];
          dq_dvm = inj.q[i] / st->vm[i] - b * st->vm[i];
        } else {
          const double co = std::cos(st->va[i] - st->va[j]);
          const double si = std::sin(st->va[i] - st->va[j]);
          dp_dth = st->vm[i] * st->vm[j] * (g * si - b * co);
          dp_dvm = st->vm[i] * (g * co + b * si);
          dq_dth = -st->vm[i] * st->vm[j] * (g * co + b * si);
          dq_dvm = st->vm[i] * (g * si - b * co);
        }
        if (row_p[i] >= 0) {
          if (col_va[j] >= 0) trip.emplace_back(row_p[i], col_va[j], dp_dth);
          if (col_vm[j] >= 0) trip.emplace_back(row_p[i], col_vm[j], dp_dvm);
        }
        if (row_q[i] >= 0) {
          if (col_va[j] >= 0) trip.emplace_back(row_q[i], col_va[j], dq_dth);
          if (col_vm[j] >= 0) trip.emplace_back(row_q[i], col_vm[j], dq_dvm);
        }
      }
    }
    if (su.distributed)
      for (int i = 0; i < n; ++i)
        if (row_p[i] >= 0 && pi_bus[i] != 0.0)
          trip.emplace_back(row_p[i], col_ell, -pi_bus[i]);

    Eigen::SparseMatrix<double> jac(rows, cols);
    jac.setFromTriplets(trip.begin(), trip.end());
    lu.compute(jac);
    if (lu.info() != Eigen::Success)
      throw SingularJacobian("Jacobian factorization failed at iteration " +
                             std::to_string(it));
    const Eigen::VectorXd dx = lu.solve(mism);
    if (!dx.allFinite()) throw Diverged("Newton step is not finite");

    for (int i = 0; i < n; ++i) {
      if (col_va[i] >= 0) st->va[i] += dx[col_va[i]];
      if (col_vm[i] >= 0) {
        st->vm[i] += dx[col_vm[i]];
        if (st->vm[i] <= 0.0)
          throw Diverged("voltage magnitude collapsed at bus " +
                         std::to_string(net.buses[i].id));
      }
    }
    if (su.distributed) st->allocation.ell_tot += dx[col_ell];
  }
}

// Assigns p_g/q_g from the solved voltages for the current types/clamps.
void assign_outputs(const Setup& su, PowerFlowState* st) {
  const NetworkCase& net = *su.net;
  const Injections inj = calc_injections(su.adm.ybus, st->vm, st->va);

  st->p_g.assign(net.n_generators(), 0.0);
  st->q_g.assign(net.n_generators(), 0.0);
  for (std::size_t g = 0; g < net.n_generators(); ++g) {
    if (!net.generators[g].in_service) continue;
    st->p_g[g] = su.psp[g];
    if (su.distributed)
      st->p_g[g] += st->allocation.pi[g] * st->allocation.ell_tot;
  }
  if (!su.distributed) {
    // The reference generators absorb the full active mismatch.
    const double p_gen_ref = inj.p[su.refi] + su.pd[su.refi];
    const auto& gl = net.generators_at(su.refi);
    double sp = 0.0;
    for (int g : gl) sp += su.psp[g];
    for (int g : gl)
      st->p_g[g] = su.psp[g] + st->allocation.pi[g] * (p_gen_ref - sp);
    st->allocation.ell_tot = p_gen_ref - sp;
  }

  for (int i = 0; i < su.n; ++i) {
    const auto& gl = net.generators_at(i);
    if (gl.empty()) continue;
    if (net.buses[i].role == BusRole::PQ) {
      for (int g : gl) st->q_g[g] = su.qfix[g];
      continue;
    }
    double q_total = inj.q[i] + su.qd[i];
    std::vector<int> free_gens;
    for (int g : gl) {
      switch (st->clamp[g]) {
        case ClampState::Free: free_gens.push_back(g); break;
        case ClampState::AtQmax:
          st->q_g[g] = net.generators[g].q_max;
          q_total -= net.generators[g].q_max;
          break;
        case ClampState::AtQmin:
          st->q_g[g] = net.generators[g].q_min;
          q_total -= net.generators[g].q_min;
          break;
      }
    }
    allocate_bus_q(net, free_gens, q_total, &st->q_g);
  }
}

}  // namespace

std::string to_string(AcVariant v) {
  switch (v) {
    case AcVariant::Base: return "base";
    case AcVariant::Bts: return "bts";
    case AcVariant::Ds: return "ds";
    case AcVariant::Spf: return "spf";
  }
  return "?";
}

AcVariant ac_variant_from_string(const std::string& s) {
  if (s == "base") return AcVariant::Base;
  if (s == "bts") return AcVariant::Bts;
  if (s == "ds") return AcVariant::Ds;
  if (s == "spf") return AcVariant::Spf;
  throw MalformedCase("unknown AC variant '" + s + "'");
}

SlackAllocation distribute_slack(const std::vector<Generator>& gens,
                                 const std::vector<double>& setpoints,
                                 double ell_tot) {
  if (gens.size() != setpoints.size())
    throw DimensionMismatch("setpoint vector does not match the generator list");
  SlackAllocation alloc;
  alloc.ell_tot = ell_tot;
  alloc.pi.assign(gens.size(), 0.0);

  double sum_h = 0.0, sum_cap = 0.0;
  int n_on = 0;
  for (std::size_t g = 0; g < gens.size(); ++g) {
    if (!gens[g].in_service) continue;
    ++n_on;
    sum_h += std::max(gens[g].p_max - setpoints[g], 0.0);
    sum_cap += gens[g].p_max;
  }
  if (n_on == 0) throw NoGenerators("no in-service generator to share slack");

  if (sum_h > 0.0) {
    alloc.mode = SlackMode::Headroom;
    for (std::size_t g = 0; g < gens.size(); ++g)
      if (gens[g].in_service)
        alloc.pi[g] = std::max(gens[g].p_max - setpoints[g], 0.0) / sum_h;
  } else if (sum_cap > 0.0) {
    alloc.mode = SlackMode::CapacityFallback;
    for (std::size_t g = 0; g < gens.size(); ++g)
      if (gens[g].in_service) alloc.pi[g] = gens[g].p_max / sum_cap;
  } else {
    alloc.mode = SlackMode::CapacityFallback;
    for (std::size_t g = 0; g < gens.size(); ++g)
      if (gens[g].in_service) alloc.pi[g] = 1.0 / static_cast<double>(n_on);
  }
  return alloc;
}

SwitchOutcome switching_round(const NetworkCase& net, const PowerFlowState& state,
                              const SolverOptions& opts) {
  SwitchOutcome out;
  out.bus_types = state.bus_types;
  out.clamp = state.clamp;

  std::vector<double> vsp(net.n_buses(), 1.0);
  if (opts.use_case_vsetpoints)
    for (std::size_t i = 0; i < net.n_buses(); ++i) {
      const auto& gl = net.generators_at(static_cast<int>(i));
      if (!gl.empty()) vsp[i] = net.generators[gl.front()].v_setpoint;
    }

  const int refi = net.ref_index();
  for (int i = 0; i < static_cast<int>(net.n_buses()); ++i) {
    if (i == refi) continue;  // the reference bus never switches
    const auto& gl = net.generators_at(i);
    if (gl.empty() || net.buses[i].role == BusRole::PQ) continue;

    if (state.bus_types[i] == BusRole::PV) {
      bool over = false, under = false;
      for (int g : gl) {
        if (state.clamp[g] != ClampState::Free) continue;
        if (state.q_g[g] > net.generators[g].q_max + opts.eps_q) over = true;
        if (state.q_g[g] < net.generators[g].q_min - opts.eps_q) under = true;
      }
      if (over || under) {
        out.bus_types[i] = BusRole::PQ;
        for (int g : gl)
          out.clamp[g] = over ? ClampState::AtQmax : ClampState::AtQmin;
        ++out.changes;
      }
    } else {
      // Clamped bus: revert only when the voltage has crossed the setpoint
      // in the direction that relieves the binding limit.
      bool revert = false;
      for (int g : gl) {
        if (out.clamp[g] == ClampState::AtQmax && state.vm[i] > vsp[i] + opts.eps_v)
          revert = true;
        if (out.clamp[g] == ClampState::AtQmin && state.vm[i] < vsp[i] - opts.eps_v)
          revert = true;
      }
      if (revert) {
        out.bus_types[i] = BusRole::PV;
        for (int g : gl) out.clamp[g] = ClampState::Free;
        ++out.changes;
      }
    }
  }
  return out;
}

PowerFlowState run_acpf(const NetworkCase& net, const DcSolution& dispatch,
                        AcVariant variant, const SolverOptions& opts,
                        const PowerFlowState* initial) {
  const Setup su = make_setup(net, dispatch, variant, opts);
  const int n = su.n;

  PowerFlowState st;
  st.bus_types.resize(n);
  for (int i = 0; i < n; ++i) {
    const Bus& b = net.buses[i];
    // A regulated bus with no in-service generator degrades to PQ.
    st.bus_types[i] = (b.role == BusRole::PV && net.generators_at(i).empty())
                          ? BusRole::PQ
                          : b.role;
  }
  st.clamp.assign(net.n_generators(), ClampState::Free);
  st.allocation = su.distributed ? distribute_slack(net.generators, su.psp, 0.0)
                                 : single_slack_allocation(su);
  st.allocation.ell_tot = 0.0;

  st.vm.assign(n, 1.0);
  st.va.assign(n, 0.0);
  if (opts.warm_start == WarmStart::FromState) {
    if (!initial)
      throw MissingReference("warm start requested without a prior state");
    if (initial->vm.size() != static_cast<std::size_t>(n) ||
        initial->va.size() != static_cast<std::size_t>(n))
      throw DimensionMismatch("warm-start state does not match the case");
    st.vm = initial->vm;
    st.va = initial->va;
  }
  for (int i = 0; i < n; ++i)
    if (st.bus_types[i] != BusRole::PQ) st.vm[i] = su.vsp[i];

  for (int round = 1;; ++round) {
    const NewtonResult nr = newton_solve(su, opts, &st);
    st.inner_iters += nr.iterations;
    st.outer_iters = round;
    assign_outputs(su, &st);

    if (!su.switching) break;
    const SwitchOutcome sw = switching_round(net, st, opts);
    if (sw.changes == 0) break;
    if (round >= opts.max_outer)
      throw SwitchLimit("bus types still changing after " +
                        std::to_string(opts.max_outer) + " rounds");
    // Newly reverted PV buses restart at their setpoint voltage.
    for (int i = 0; i < n; ++i)
      if (sw.bus_types[i] == BusRole::PV && st.bus_types[i] == BusRole::PQ)
        st.vm[i] = su.vsp[i];
    st.bus_types = sw.bus_types;
    st.clamp = sw.clamp;
    if (su.distributed && !opts.reparticipate_each_iteration) {
      const double ell = st.allocation.ell_tot;
      st.allocation = distribute_slack(net.generators, su.psp, ell);
    }
  }

  st.converged = true;
  return st;
}

Eigen::VectorXd compute_mismatch(const NetworkCase& net, const PowerFlowState& state) {
  const AdmittanceMatrix adm = build_admittance(net);
  const int n = static_cast<int>(net.n_buses());
  const Injections inj = calc_injections(adm.ybus, state.vm, state.va);
  const int refi = net.ref_index();
  const bool with_ref = state.allocation.mode != SlackMode::SingleSlack;

  std::vector<double> pspec(n), qspec(n);
  for (int i = 0; i < n; ++i) {
    pspec[i] = -net.buses[i].p_d;
    qspec[i] = -net.buses[i].q_d;
  }
  for (std::size_t g = 0; g < net.n_generators(); ++g) {
    if (!net.generators[g].in_service) continue;
    const int bi = net.bus_index(net.generators[g].bus);
    pspec[bi] += state.p_g[g];
    qspec[bi] += state.q_g[g];
  }

  std::vector<double> rows;
  for (int i = 0; i < n; ++i)
    if (i != refi || with_ref) rows.push_back(pspec[i] - inj.p[i]);
  for (int i = 0; i < n; ++i)
    if (state.bus_types[i] == BusRole::PQ) rows.push_back(qspec[i] - inj.q[i]);
  if (rows.empty()) return Eigen::VectorXd();
  return Eigen::Map<Eigen::VectorXd>(rows.data(), static_cast<int>(rows.size()));
}

std::string state_to_json(const NetworkCase& net, const PowerFlowState& state) {
  nlohmann::ordered_json j;
  j["case"] = net.name;
  j["converged"] = state.converged;
  j["inner_iters"] = state.inner_iters;
  j["outer_iters"] = state.outer_iters;
  const char* mode = state.allocation.mode == SlackMode::Headroom
                         ? "headroom"
                         : state.allocation.mode == SlackMode::CapacityFallback
                               ? "capacity_fallback"
                               : "single_slack";
  j["allocation"] = {{"mode", mode}, {"ell_tot", state.allocation.ell_tot}};
  auto role_name = [](BusRole r) {
    return r == BusRole::REF ? "ref" : r == BusRole::PV ? "pv" : "pq";
  };
  nlohmann::ordered_json buses = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < net.n_buses(); ++i)
    buses.push_back({{"bus", net.buses[i].id},
                     {"vm", state.vm[i]},
                     {"va", state.va[i]},
                     {"type", role_name(state.bus_types[i])}});
  j["buses"] = std::move(buses);
  nlohmann::ordered_json gens = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < net.n_generators(); ++g)
    gens.push_back({{"bus", net.generators[g].bus},
                    {"index", g},
                    {"pg_mw", state.p_g[g] * net.base_mva},
                    {"qg_mvar", state.q_g[g] * net.base_mva}});
  j["generators"] = std::move(gens);
  return j.dump(2);
}

}  // namespace dc2ac
