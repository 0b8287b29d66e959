#include "dc2ac/dc_dispatch.hpp"

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dc2ac/dc_network.hpp"
#include "dc2ac/errors.hpp"
#include "dc2ac/qp.hpp"

namespace dc2ac {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Minimum spacing between tangent-cut points on one branch. Closer cuts are
// numerically near-duplicate rows and refine modeled losses by under
// r * spacing^2, which is far below the loss-loop tolerance.
constexpr double kCutSpacing = 1e-4;

std::vector<int> on_generators(const NetworkCase& net) {
  std::vector<int> idx;
  for (std::size_t g = 0; g < net.n_generators(); ++g)
    if (net.generators[g].in_service) idx.push_back(static_cast<int>(g));
  return idx;
}

std::vector<int> on_branches(const NetworkCase& net) {
  std::vector<int> idx;
  for (std::size_t e = 0; e < net.n_branches(); ++e)
    if (net.branches[e].in_service) idx.push_back(static_cast<int>(e));
  return idx;
}

// Bus active withdrawals: demand plus conductive shunt load at nominal voltage.
Eigen::VectorXd withdrawals(const NetworkCase& net) {
  Eigen::VectorXd d(net.n_buses());
  for (std::size_t i = 0; i < net.n_buses(); ++i)
    d[i] = net.buses[i].p_d + net.buses[i].gs;
  return d;
}

double fixed_cost(const NetworkCase& net, const std::vector<int>& gens) {
  double c0 = 0.0;
  for (int g : gens) c0 += net.generators[g].cost.c0;
  return c0;
}

// Quadratic cost terms for p.u. generator variables starting at column p0.
// Cost curves are MW-based, so the chain rule brings in base_mva.
void add_cost_terms(const NetworkCase& net, const std::vector<int>& gens, int p0,
                    std::vector<Eigen::Triplet<double>>* h, Eigen::VectorXd* c) {
  const double base = net.base_mva;
  for (std::size_t k = 0; k < gens.size(); ++k) {
    const CostCurve& cc = net.generators[gens[k]].cost;
    if (cc.c2 != 0.0)
      h->emplace_back(p0 + static_cast<int>(k), p0 + static_cast<int>(k),
                      2.0 * cc.c2 * base * base);
    (*c)[p0 + static_cast<int>(k)] = cc.c1 * base;
  }
}

QpSolution checked_solve(const QpProblem& prob, const char* what) {
  QpSolution qs;
  try {
    qs = solve_qp(prob);
  } catch (const NumericalBreakdown& e) {
    throw SolverFailure(std::string(what) + ": " + e.what());
  }
  switch (qs.status) {
    case QpStatus::Optimal:
      return qs;
    case QpStatus::Infeasible:
      throw InfeasibleDispatch(std::string(what) +
                               ": limits cannot meet the demand");
    case QpStatus::Unbounded:
      throw SolverFailure(std::string(what) + ": problem is unbounded");
    case QpStatus::MaxIter:
      throw SolverFailure(std::string(what) + ": iteration limit reached");
  }
  throw SolverFailure(what);
}

std::vector<double> expand_gens(const NetworkCase& net, const std::vector<int>& gens,
                                const Eigen::VectorXd& x, int p0) {
  std::vector<double> p(net.n_generators(), 0.0);
  for (std::size_t k = 0; k < gens.size(); ++k) p[gens[k]] = x[p0 + static_cast<int>(k)];
  return p;
}

// Shared directed-flow formulation for Lqcp/Lloa: variables [p, theta, fwd,
// rev] with per-line loss cuts (fwd + rev >= tangent of r*fwd^2 at each cut
// point, and >= 0).
DcSolution solve_directed(const NetworkCase& net,
                          const std::vector<std::vector<double>>& cut_points,
                          DcVariant tag, const char* what) {
  check_connected(net);
  const auto gens = on_generators(net);
  const auto brs = on_branches(net);
  const int n = static_cast<int>(net.n_buses());
  const int nog = static_cast<int>(gens.size());
  const int nob = static_cast<int>(brs.size());
  const int p0 = 0, th0 = nog, f0 = nog + n, r0 = nog + n + nob;
  const int nv = nog + n + 2 * nob;

  QpProblem prob;
  prob.c = Eigen::VectorXd::Zero(nv);
  std::vector<Eigen::Triplet<double>> h;
  add_cost_terms(net, gens, p0, &h, &prob.c);
  prob.H.resize(nv, nv);
  prob.H.setFromTriplets(h.begin(), h.end());

  const Eigen::VectorXd d = withdrawals(net);
  std::vector<Eigen::Triplet<double>> te;
  std::vector<double> be;

  // Reference angle.
  te.emplace_back(0, th0 + net.ref_index(), 1.0);
  be.push_back(0.0);
  // Forward flow definition per in-service branch.
  for (int e = 0; e < nob; ++e) {
    const Branch& br = net.branches[brs[e]];
    const double b = dc_susceptance(br);
    const int row = static_cast<int>(be.size());
    te.emplace_back(row, f0 + e, 1.0);
    te.emplace_back(row, th0 + net.bus_index(br.from_bus), -b);
    te.emplace_back(row, th0 + net.bus_index(br.to_bus), b);
    be.push_back(-b * br.shift);
  }
  // Per-bus balance with both directed flows as withdrawals at their ends.
  const int bal0 = static_cast<int>(be.size());
  for (int i = 0; i < n; ++i) be.push_back(d[i]);
  for (int k = 0; k < nog; ++k)
    te.emplace_back(bal0 + net.bus_index(net.generators[gens[k]].bus), p0 + k, 1.0);
  for (int e = 0; e < nob; ++e) {
    const Branch& br = net.branches[brs[e]];
    te.emplace_back(bal0 + net.bus_index(br.from_bus), f0 + e, -1.0);
    te.emplace_back(bal0 + net.bus_index(br.to_bus), r0 + e, -1.0);
  }
  prob.A_eq.resize(static_cast<int>(be.size()), nv);
  prob.A_eq.setFromTriplets(te.begin(), te.end());
  prob.b_eq = Eigen::Map<Eigen::VectorXd>(be.data(), static_cast<int>(be.size()));

  // Loss inequalities: nonnegativity plus one tangent cut per point.
  std::vector<Eigen::Triplet<double>> ti;
  std::vector<double> bi;
  for (int e = 0; e < nob; ++e) {
    const double r = net.branches[brs[e]].r;
    {
      const int row = static_cast<int>(bi.size());
      ti.emplace_back(row, f0 + e, -1.0);
      ti.emplace_back(row, r0 + e, -1.0);
      bi.push_back(0.0);
    }
    for (double fbar : cut_points[e]) {
      // A tangent this close to zero coincides with the nonnegativity row.
      if (r == 0.0 || std::abs(fbar) < kCutSpacing) continue;
      const int row = static_cast<int>(bi.size());
      ti.emplace_back(row, f0 + e, 2.0 * r * fbar - 1.0);
      ti.emplace_back(row, r0 + e, -1.0);
      bi.push_back(r * fbar * fbar);
    }
  }
  prob.A_in.resize(static_cast<int>(bi.size()), nv);
  prob.A_in.setFromTriplets(ti.begin(), ti.end());
  prob.b_in = Eigen::Map<Eigen::VectorXd>(bi.data(), static_cast<int>(bi.size()));

  prob.lb = Eigen::VectorXd::Constant(nv, -kInf);
  prob.ub = Eigen::VectorXd::Constant(nv, kInf);
  for (int k = 0; k < nog; ++k) {
    prob.lb[p0 + k] = net.generators[gens[k]].p_min;
    prob.ub[p0 + k] = net.generators[gens[k]].p_max;
  }
  for (int e = 0; e < nob; ++e) {
    const double rate = net.branches[brs[e]].rate_a;
    if (rate > 0.0) {
      prob.lb[f0 + e] = -rate;
      prob.ub[f0 + e] = rate;
      prob.lb[r0 + e] = -rate;
      prob.ub[r0 + e] = rate;
    }
  }

  const QpSolution qs = checked_solve(prob, what);

  DcSolution sol;
  sol.loss_model = tag;
  sol.p_g_sp = expand_gens(net, gens, qs.x, p0);
  sol.theta_dc.assign(n, 0.0);
  for (int i = 0; i < n; ++i) sol.theta_dc[i] = qs.x[th0 + i];
  sol.flow_fwd.assign(net.n_branches(), 0.0);
  sol.flow_rev.assign(net.n_branches(), 0.0);
  double losses = 0.0;
  for (int e = 0; e < nob; ++e) {
    sol.flow_fwd[brs[e]] = qs.x[f0 + e];
    sol.flow_rev[brs[e]] = qs.x[r0 + e];
    losses += qs.x[f0 + e] + qs.x[r0 + e];
  }
  sol.modeled_losses = losses;
  sol.objective = qs.objective + fixed_cost(net, gens);
  return sol;
}

}  // namespace

std::string to_string(DcVariant v) {
  switch (v) {
    case DcVariant::Base: return "base";
    case DcVariant::Lllf: return "lllf";
    case DcVariant::Lqcp: return "lqcp";
    case DcVariant::Lloa: return "lloa";
  }
  return "?";
}

DcVariant dc_variant_from_string(const std::string& s) {
  if (s == "base") return DcVariant::Base;
  if (s == "lllf") return DcVariant::Lllf;
  if (s == "lqcp") return DcVariant::Lqcp;
  if (s == "lloa") return DcVariant::Lloa;
  throw MalformedCase("unknown DC variant '" + s + "'");
}

DcSolution solve_dc_base(const NetworkCase& net) {
  check_connected(net);
  const auto gens = on_generators(net);
  const int n = static_cast<int>(net.n_buses());
  const int nog = static_cast<int>(gens.size());
  const int p0 = 0, th0 = nog;
  const int nv = nog + n;

  QpProblem prob;
  prob.c = Eigen::VectorXd::Zero(nv);
  std::vector<Eigen::Triplet<double>> h;
  add_cost_terms(net, gens, p0, &h, &prob.c);
  prob.H.resize(nv, nv);
  prob.H.setFromTriplets(h.begin(), h.end());

  const Eigen::VectorXd d = withdrawals(net);
  std::vector<Eigen::Triplet<double>> te;
  std::vector<double> be;
  // Per-bus balance: generation minus angle-based outflow equals withdrawal.
  for (int i = 0; i < n; ++i) be.push_back(d[i]);
  for (int k = 0; k < nog; ++k)
    te.emplace_back(net.bus_index(net.generators[gens[k]].bus), p0 + k, 1.0);
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    const double b = dc_susceptance(br);
    const int f = net.bus_index(br.from_bus);
    const int t = net.bus_index(br.to_bus);
    te.emplace_back(f, th0 + f, -b);
    te.emplace_back(f, th0 + t, b);
    te.emplace_back(t, th0 + f, b);
    te.emplace_back(t, th0 + t, -b);
    // Shift offsets move to the right-hand side.
    be[f] += b * br.shift;
    be[t] -= b * br.shift;
  }
  {
    const int row = static_cast<int>(be.size());
    te.emplace_back(row, th0 + net.ref_index(), 1.0);
    be.push_back(0.0);
  }
  prob.A_eq.resize(static_cast<int>(be.size()), nv);
  prob.A_eq.setFromTriplets(te.begin(), te.end());
  prob.b_eq = Eigen::Map<Eigen::VectorXd>(be.data(), static_cast<int>(be.size()));

  // Flow limits on rated in-service branches, both directions.
  std::vector<Eigen::Triplet<double>> ti;
  std::vector<double> bi;
  for (const Branch& br : net.branches) {
    if (!br.in_service || br.rate_a <= 0.0) continue;
    const double b = dc_susceptance(br);
    const int f = net.bus_index(br.from_bus);
    const int t = net.bus_index(br.to_bus);
    int row = static_cast<int>(bi.size());
    ti.emplace_back(row, th0 + f, b);
    ti.emplace_back(row, th0 + t, -b);
    bi.push_back(br.rate_a + b * br.shift);
    row = static_cast<int>(bi.size());
    ti.emplace_back(row, th0 + f, -b);
    ti.emplace_back(row, th0 + t, b);
    bi.push_back(br.rate_a - b * br.shift);
  }
  prob.A_in.resize(static_cast<int>(bi.size()), nv);
  prob.A_in.setFromTriplets(ti.begin(), ti.end());
  prob.b_in = Eigen::Map<Eigen::VectorXd>(bi.data(), static_cast<int>(bi.size()));

  prob.lb = Eigen::VectorXd::Constant(nv, -kInf);
  prob.ub = Eigen::VectorXd::Constant(nv, kInf);
  for (int k = 0; k < nog; ++k) {
    prob.lb[p0 + k] = net.generators[gens[k]].p_min;
    prob.ub[p0 + k] = net.generators[gens[k]].p_max;
  }

  const QpSolution qs = checked_solve(prob, "DC base dispatch");

  DcSolution sol;
  sol.loss_model = DcVariant::Base;
  sol.p_g_sp = expand_gens(net, gens, qs.x, p0);
  sol.theta_dc.assign(n, 0.0);
  Eigen::VectorXd theta(n);
  for (int i = 0; i < n; ++i) {
    sol.theta_dc[i] = qs.x[th0 + i];
    theta[i] = qs.x[th0 + i];
  }
  const Eigen::VectorXd flows = dc_flows(net, theta);
  sol.flow_fwd.assign(flows.data(), flows.data() + flows.size());
  sol.flow_rev.resize(net.n_branches());
  for (std::size_t e = 0; e < net.n_branches(); ++e) sol.flow_rev[e] = -sol.flow_fwd[e];
  sol.modeled_losses = 0.0;
  sol.objective = qs.objective + fixed_cost(net, gens);
  return sol;
}

LossFactors compute_loss_factors(const NetworkCase& net, const DcSolution& reference,
                                 int slack_bus) {
  if (reference.p_g_sp.size() != net.n_generators() ||
      reference.flow_fwd.size() != net.n_branches())
    throw MissingReference("reference dispatch does not match the case");

  const PtdfMatrix ptdf = build_ptdf(net, slack_bus);
  const int n = static_cast<int>(net.n_buses());
  const int ne = static_cast<int>(net.n_branches());

  Eigen::VectorXd rf(ne);
  for (int e = 0; e < ne; ++e)
    rf[e] = net.branches[e].in_service
                ? net.branches[e].r * reference.flow_fwd[e]
                : 0.0;

  LossFactors lf;
  lf.lambda = -2.0 * (ptdf.phi.transpose() * rf);

  Eigen::VectorXd p_ref = -withdrawals(net);
  for (std::size_t g = 0; g < net.n_generators(); ++g)
    if (net.generators[g].in_service)
      p_ref[net.bus_index(net.generators[g].bus)] += reference.p_g_sp[g];

  double quad = 0.0;
  for (int e = 0; e < ne; ++e)
    if (net.branches[e].in_service)
      quad += net.branches[e].r * reference.flow_fwd[e] * reference.flow_fwd[e];
  lf.ell_ref = -lf.lambda.dot(p_ref) + quad;
  lf.ref_flows = Eigen::Map<const Eigen::VectorXd>(reference.flow_fwd.data(), ne);
  return lf;
}

DcSolution solve_dc_lllf(const NetworkCase& net, const LossFactors& factors) {
  check_connected(net);
  const int n = static_cast<int>(net.n_buses());
  const int ne = static_cast<int>(net.n_branches());
  if (factors.lambda.size() != n)
    throw MissingReference("loss factors do not match the case");

  const auto gens = on_generators(net);
  const int nog = static_cast<int>(gens.size());
  const int slack_bus = net.ref_bus();
  const PtdfMatrix ptdf = build_ptdf(net, slack_bus);
  const Eigen::VectorXd d = withdrawals(net);
  // Flows are affine in dispatch: phi*(Cg p - d) + shift offsets.
  const Eigen::VectorXd base_flow = -(ptdf.phi * d) + ptdf.shift_flow;

  QpProblem prob;
  prob.c = Eigen::VectorXd::Zero(nog);
  std::vector<Eigen::Triplet<double>> h;
  add_cost_terms(net, gens, 0, &h, &prob.c);
  prob.H.resize(nog, nog);
  prob.H.setFromTriplets(h.begin(), h.end());

  // Single balance row: sum p - lambda'Cg p = sum d + ell_ref - lambda'd.
  std::vector<Eigen::Triplet<double>> te;
  for (int k = 0; k < nog; ++k) {
    const int bi = net.bus_index(net.generators[gens[k]].bus);
    te.emplace_back(0, k, 1.0 - factors.lambda[bi]);
  }
  prob.A_eq.resize(1, nog);
  prob.A_eq.setFromTriplets(te.begin(), te.end());
  prob.b_eq = Eigen::VectorXd::Constant(
      1, d.sum() + factors.ell_ref - factors.lambda.dot(d));

  std::vector<Eigen::Triplet<double>> ti;
  std::vector<double> bi_rows;
  for (int e = 0; e < ne; ++e) {
    const Branch& br = net.branches[e];
    if (!br.in_service || br.rate_a <= 0.0) continue;
    for (int sign : {+1, -1}) {
      const int row = static_cast<int>(bi_rows.size());
      for (int k = 0; k < nog; ++k) {
        const int bidx = net.bus_index(net.generators[gens[k]].bus);
        const double coef = sign * ptdf.phi(e, bidx);
        if (coef != 0.0) ti.emplace_back(row, k, coef);
      }
      bi_rows.push_back(br.rate_a - sign * base_flow[e]);
    }
  }
  prob.A_in.resize(static_cast<int>(bi_rows.size()), nog);
  prob.A_in.setFromTriplets(ti.begin(), ti.end());
  prob.b_in =
      Eigen::Map<Eigen::VectorXd>(bi_rows.data(), static_cast<int>(bi_rows.size()));

  prob.lb.resize(nog);
  prob.ub.resize(nog);
  for (int k = 0; k < nog; ++k) {
    prob.lb[k] = net.generators[gens[k]].p_min;
    prob.ub[k] = net.generators[gens[k]].p_max;
  }

  const QpSolution qs = checked_solve(prob, "DC linear-loss dispatch");

  DcSolution sol;
  sol.loss_model = DcVariant::Lllf;
  sol.p_g_sp = expand_gens(net, gens, qs.x, 0);

  Eigen::VectorXd inj = -d;
  for (std::size_t g = 0; g < net.n_generators(); ++g)
    if (net.generators[g].in_service)
      inj[net.bus_index(net.generators[g].bus)] += sol.p_g_sp[g];
  sol.modeled_losses = factors.ell_ref + factors.lambda.dot(inj);

  const Eigen::VectorXd flows = ptdf.phi * inj + ptdf.shift_flow;
  sol.flow_fwd.assign(flows.data(), flows.data() + flows.size());
  sol.flow_rev.resize(ne);
  for (int e = 0; e < ne; ++e) sol.flow_rev[e] = -sol.flow_fwd[e];

  // Angles recovered post hoc; the slack absorbs the modeled losses.
  const Eigen::VectorXd theta = dc_angles(net, inj, slack_bus);
  sol.theta_dc.assign(theta.data(), theta.data() + theta.size());
  sol.objective = qs.objective + fixed_cost(net, gens);
  return sol;
}

DcSolution solve_dc_lqcp(const NetworkCase& net, double tol_loss, int max_rounds) {
  const DcSolution base = solve_dc_base(net);
  const auto brs = on_branches(net);
  const int nob = static_cast<int>(brs.size());

  std::vector<std::vector<double>> cuts(nob);
  for (int e = 0; e < nob; ++e) cuts[e].push_back(base.flow_fwd[brs[e]]);

  double prev_losses = std::numeric_limits<double>::quiet_NaN();
  for (int round = 0; round < max_rounds; ++round) {
    DcSolution sol = solve_directed(net, cuts, DcVariant::Lqcp,
                                    "DC quadratic-loss dispatch");
    if (!std::isnan(prev_losses) &&
        std::abs(sol.modeled_losses - prev_losses) <
            tol_loss * std::max(1.0, std::abs(sol.modeled_losses)))
      return sol;
    prev_losses = sol.modeled_losses;
    int added = 0;
    for (int e = 0; e < nob; ++e) {
      const double f = sol.flow_fwd[brs[e]];
      bool known = std::abs(f) < kCutSpacing;  // tangent at 0 is nonnegativity
      for (double c : cuts[e]) {
        if (known) break;
        known = std::abs(c - f) < kCutSpacing;
      }
      if (!known) {
        cuts[e].push_back(f);
        ++added;
      }
    }
    // No new point means the accumulated model cannot change further.
    if (added == 0) return sol;
  }
  throw CutLoopDiverged("losses did not settle within " +
                        std::to_string(max_rounds) + " cut rounds");
}

DcSolution solve_dc_lloa(const NetworkCase& net, const DcSolution& reference) {
  if (reference.flow_fwd.size() != net.n_branches())
    throw MissingReference("reference flows do not match the case");
  const auto brs = on_branches(net);
  std::vector<std::vector<double>> cuts(brs.size());
  for (std::size_t e = 0; e < brs.size(); ++e)
    cuts[e].push_back(reference.flow_fwd[brs[e]]);
  DcSolution sol =
      solve_directed(net, cuts, DcVariant::Lloa, "DC outer-approximation dispatch");
  return sol;
}

DcSolution solve_dc(const NetworkCase& net, DcVariant variant,
                    const DcSolution* base_reference) {
  switch (variant) {
    case DcVariant::Base:
      return solve_dc_base(net);
    case DcVariant::Lllf: {
      DcSolution base;
      if (!base_reference) base = solve_dc_base(net);
      const DcSolution& ref = base_reference ? *base_reference : base;
      return solve_dc_lllf(net, compute_loss_factors(net, ref, net.ref_bus()));
    }
    case DcVariant::Lqcp:
      return solve_dc_lqcp(net);
    case DcVariant::Lloa: {
      DcSolution base;
      if (!base_reference) base = solve_dc_base(net);
      return solve_dc_lloa(net, base_reference ? *base_reference : base);
    }
  }
  throw SolverFailure("unknown DC variant");
}

std::string dc_solution_to_json(const NetworkCase& net, const DcSolution& sol) {
  nlohmann::ordered_json j;
  j["case"] = net.name;
  j["loss_model"] = to_string(sol.loss_model);
  nlohmann::ordered_json gens = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < net.n_generators(); ++g) {
    if (!net.generators[g].in_service) continue;
    gens.push_back({{"bus", net.generators[g].bus},
                    {"index", g},
                    {"pg_mw", sol.p_g_sp[g] * net.base_mva}});
  }
  j["generators"] = std::move(gens);
  nlohmann::ordered_json flows = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < net.n_branches(); ++e)
    flows.push_back({{"from", net.branches[e].from_bus},
                     {"to", net.branches[e].to_bus},
                     {"fwd_mw", sol.flow_fwd[e] * net.base_mva},
                     {"rev_mw", sol.flow_rev[e] * net.base_mva}});
  j["branch_flows"] = std::move(flows);
  j["modeled_losses_mw"] = sol.modeled_losses * net.base_mva;
  j["cost"] = sol.objective;
  return j.dump(2);
}

}  // namespace dc2ac
