#include "dc2ac/dc_network.hpp"

#include <queue>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "dc2ac/errors.hpp"

namespace dc2ac {

double dc_susceptance(const Branch& br) {
  if (br.x == 0.0)
    throw SingularBranch("branch " + std::to_string(br.from_bus) + "-" +
                         std::to_string(br.to_bus) +
                         " has zero reactance; no DC susceptance");
  return 1.0 / (br.x * br.tap);
}

void check_connected(const NetworkCase& net) {
  const int n = static_cast<int>(net.n_buses());
  std::vector<std::vector<int>> adj(n);
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    const int f = net.bus_index(br.from_bus);
    const int t = net.bus_index(br.to_bus);
    adj[f].push_back(t);
    adj[t].push_back(f);
  }
  std::vector<char> seen(n, 0);
  std::queue<int> queue;
  queue.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        queue.push(v);
      }
    }
  }
  if (reached < n) {
    for (int i = 0; i < n; ++i) {
      if (!seen[i])
        throw IslandedNetwork("bus " + std::to_string(net.buses[i].id) +
                              " is unreachable from bus " +
                              std::to_string(net.buses[0].id));
    }
  }
}

namespace {

// Reduced susceptance matrix (slack row/column removed) and the map from
// bus index to reduced index (-1 for the slack).
struct ReducedB {
  Eigen::SparseMatrix<double> b;
  std::vector<int> reduced_index;
  Eigen::VectorXd shift_injection;  // per bus, from phase shifters
};

ReducedB build_reduced(const NetworkCase& net, int slack_idx) {
  const int n = static_cast<int>(net.n_buses());
  ReducedB red;
  red.reduced_index.assign(n, -1);
  int r = 0;
  for (int i = 0; i < n; ++i)
    if (i != slack_idx) red.reduced_index[i] = r++;

  red.shift_injection = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trip;
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    const double b = dc_susceptance(br);
    const int f = net.bus_index(br.from_bus);
    const int t = net.bus_index(br.to_bus);
    const int rf = red.reduced_index[f];
    const int rt = red.reduced_index[t];
    if (rf >= 0) trip.emplace_back(rf, rf, b);
    if (rt >= 0) trip.emplace_back(rt, rt, b);
    if (rf >= 0 && rt >= 0) {
      trip.emplace_back(rf, rt, -b);
      trip.emplace_back(rt, rf, -b);
    }
    // A phase shift acts like a balanced injection pair on the branch ends.
    red.shift_injection[f] -= b * br.shift;
    red.shift_injection[t] += b * br.shift;
  }
  red.b.resize(n - 1, n - 1);
  red.b.setFromTriplets(trip.begin(), trip.end());
  return red;
}

}  // namespace

Eigen::VectorXd dc_angles(const NetworkCase& net, const Eigen::VectorXd& injections,
                          int slack_bus) {
  check_connected(net);
  const int n = static_cast<int>(net.n_buses());
  if (injections.size() != n)
    throw DimensionMismatch("injection vector has " +
                            std::to_string(injections.size()) + " entries for " +
                            std::to_string(n) + " buses");
  const int slack_idx = net.bus_index(slack_bus);
  ReducedB red = build_reduced(net, slack_idx);

  Eigen::VectorXd rhs(n - 1);
  for (int i = 0; i < n; ++i) {
    const int r = red.reduced_index[i];
    if (r >= 0) rhs[r] = injections[i] - red.shift_injection[i];
  }

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(red.b);
  if (lu.info() != Eigen::Success)
    throw IslandedNetwork("reduced susceptance matrix is singular");
  Eigen::VectorXd theta_red = lu.solve(rhs);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const int r = red.reduced_index[i];
    if (r >= 0) theta[i] = theta_red[r];
  }
  return theta;
}

Eigen::VectorXd dc_flows(const NetworkCase& net, const Eigen::VectorXd& theta) {
  const int e = static_cast<int>(net.n_branches());
  Eigen::VectorXd flows = Eigen::VectorXd::Zero(e);
  for (int k = 0; k < e; ++k) {
    const Branch& br = net.branches[k];
    if (!br.in_service) continue;
    const double b = dc_susceptance(br);
    const int f = net.bus_index(br.from_bus);
    const int t = net.bus_index(br.to_bus);
    flows[k] = b * (theta[f] - theta[t] - br.shift);
  }
  return flows;
}

PtdfMatrix build_ptdf(const NetworkCase& net, int slack_bus) {
  check_connected(net);
  const int n = static_cast<int>(net.n_buses());
  const int e = static_cast<int>(net.n_branches());
  const int slack_idx = net.bus_index(slack_bus);
  ReducedB red = build_reduced(net, slack_idx);

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(red.b);
  if (lu.info() != Eigen::Success)
    throw IslandedNetwork("reduced susceptance matrix is singular");

  // Columns of inv(B_red): bus angles for unit injections at each non-slack bus.
  Eigen::MatrixXd binv = lu.solve(Eigen::MatrixXd::Identity(n - 1, n - 1));

  PtdfMatrix ptdf;
  ptdf.slack_bus = slack_bus;
  ptdf.phi = Eigen::MatrixXd::Zero(e, n);
  ptdf.shift_flow = Eigen::VectorXd::Zero(e);

  // Angles induced by phase-shift equivalent injections alone.
  Eigen::VectorXd shift_rhs(n - 1);
  for (int i = 0; i < n; ++i) {
    const int r = red.reduced_index[i];
    if (r >= 0) shift_rhs[r] = -red.shift_injection[i];
  }
  Eigen::VectorXd theta_shift_red = lu.solve(shift_rhs);

  for (int k = 0; k < e; ++k) {
    const Branch& br = net.branches[k];
    if (!br.in_service) continue;
    const double b = dc_susceptance(br);
    const int f = net.bus_index(br.from_bus);
    const int t = net.bus_index(br.to_bus);
    const int rf = red.reduced_index[f];
    const int rt = red.reduced_index[t];
    for (int j = 0; j < n; ++j) {
      const int rj = red.reduced_index[j];
      if (rj < 0) continue;  // slack column stays zero
      const double th_f = rf >= 0 ? binv(rf, rj) : 0.0;
      const double th_t = rt >= 0 ? binv(rt, rj) : 0.0;
      ptdf.phi(k, j) = b * (th_f - th_t);
    }
    const double sh_f = rf >= 0 ? theta_shift_red[rf] : 0.0;
    const double sh_t = rt >= 0 ? theta_shift_red[rt] : 0.0;
    ptdf.shift_flow[k] = b * (sh_f - sh_t - br.shift);
  }
  return ptdf;
}

}  // namespace dc2ac
