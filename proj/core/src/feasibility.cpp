#include "dc2ac/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dc2ac/admittance.hpp"
#include "dc2ac/errors.hpp"

namespace dc2ac {
namespace {

constexpr double kTolPu = 1e-6;       // magnitudes at or below are solver noise
constexpr double kTolThermal = 1e-4;  // percent

void finish(CategoryReport* cat) {
  cat->count = static_cast<int>(cat->details.size());
  cat->max_violation = 0.0;
  cat->sum_violation = 0.0;
  for (const ViolationDetail& d : cat->details) {
    cat->max_violation = std::max(cat->max_violation, d.magnitude);
    cat->sum_violation += d.magnitude;
  }
}

}  // namespace

ViolationReport check_violations(const NetworkCase& net, const PowerFlowState& state) {
  if (!state.converged)
    throw NotConverged("violations are only defined for a converged state");

  ViolationReport rep;
  for (std::size_t g = 0; g < net.n_generators(); ++g) {
    const Generator& gen = net.generators[g];
    if (!gen.in_service) continue;
    const double vp =
        std::max(state.p_g[g] - gen.p_max, gen.p_min - state.p_g[g]);
    if (vp > kTolPu) rep.active.details.push_back({static_cast<int>(g), vp});
    const double vq =
        std::max(state.q_g[g] - gen.q_max, gen.q_min - state.q_g[g]);
    if (vq > kTolPu) rep.reactive.details.push_back({static_cast<int>(g), vq});
  }

  for (std::size_t i = 0; i < net.n_buses(); ++i) {
    const Bus& b = net.buses[i];
    const double vv = std::max(state.vm[i] - b.v_max, b.v_min - state.vm[i]);
    if (vv > kTolPu) rep.voltage.details.push_back({static_cast<int>(i), vv});
  }

  const AdmittanceMatrix adm = build_admittance(net);
  Eigen::VectorXcd v(net.n_buses());
  for (std::size_t i = 0; i < net.n_buses(); ++i)
    v[i] = std::polar(state.vm[i], state.va[i]);
  for (std::size_t e = 0; e < net.n_branches(); ++e) {
    const Branch& br = net.branches[e];
    if (!br.in_service || br.rate_a <= 0.0) continue;
    const int f = net.bus_index(br.from_bus);
    const int t = net.bus_index(br.to_bus);
    const std::complex<double> sf =
        v[f] * std::conj(adm.yff[e] * v[f] + adm.yft[e] * v[t]);
    const std::complex<double> st =
        v[t] * std::conj(adm.ytf[e] * v[f] + adm.ytt[e] * v[t]);
    const double smax = std::max(std::abs(sf), std::abs(st));
    const double over = (smax - br.rate_a) / br.rate_a * 100.0;
    if (over > kTolThermal)
      rep.thermal.details.push_back({static_cast<int>(e), over});
  }

  finish(&rep.active);
  finish(&rep.reactive);
  finish(&rep.voltage);
  finish(&rep.thermal);
  return rep;
}

ReferenceDispatch parse_reference_json(const std::string& text, double base_mva) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedCase(std::string("reference JSON: ") + e.what());
  }
  if (!(base_mva > 0.0)) throw MalformedCase("base MVA must be positive");

  ReferenceDispatch ref;
  try {
    ref.source = j.at("case").get<std::string>();
    ref.cost_ref = j.at("cost").get<double>();
    for (const auto& g : j.at("generators")) {
      ref.gen_bus.push_back(g.at("bus").get<int>());
      ref.gen_index.push_back(g.at("index").get<int>());
      ref.p_g_ref.push_back(g.at("pg_mw").get<double>() / base_mva);
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedCase(std::string("reference JSON: ") + e.what());
  }
  return ref;
}

ReferenceDispatch load_reference_file(const std::string& path, double base_mva) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoFailure("cannot read '" + path + "'");
  return parse_reference_json(ss.str(), base_mva);
}

void validate_reference(const NetworkCase& net, const ReferenceDispatch& ref) {
  std::set<int> covered;
  for (std::size_t k = 0; k < ref.gen_index.size(); ++k) {
    const int g = ref.gen_index[k];
    if (g < 0 || g >= static_cast<int>(net.n_generators()))
      throw DimensionMismatch("reference entry " + std::to_string(k) +
                              " names generator " + std::to_string(g) +
                              " outside the case");
    if (net.generators[g].bus != ref.gen_bus[k])
      throw DimensionMismatch("reference entry " + std::to_string(k) +
                              " bus does not match generator " + std::to_string(g));
    covered.insert(g);
  }
  for (std::size_t g = 0; g < net.n_generators(); ++g)
    if (net.generators[g].in_service && !covered.count(static_cast<int>(g)))
      throw DimensionMismatch("reference misses in-service generator " +
                              std::to_string(g));
}

double compute_mae(const std::vector<double>& p_g, const ReferenceDispatch& ref) {
  if (ref.gen_index.empty()) throw DimensionMismatch("empty reference dispatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < ref.gen_index.size(); ++k) {
    const int g = ref.gen_index[k];
    if (g < 0 || g >= static_cast<int>(p_g.size()))
      throw DimensionMismatch("reference names generator " + std::to_string(g) +
                              " outside the dispatch vector");
    sum += std::abs(p_g[g] - ref.p_g_ref[k]);
  }
  return sum / static_cast<double>(ref.gen_index.size());
}

double compute_cost_difference(double cost, const ReferenceDispatch& ref) {
  if (ref.cost_ref <= 0.0)
    throw ZeroReferenceCost("reference cost must be positive");
  return std::abs(cost - ref.cost_ref) / ref.cost_ref * 100.0;
}

double dispatch_cost(const NetworkCase& net, const std::vector<double>& p_g) {
  if (p_g.size() != net.n_generators())
    throw DimensionMismatch("dispatch vector has " + std::to_string(p_g.size()) +
                            " entries for " + std::to_string(net.n_generators()) +
                            " generators");
  double cost = 0.0;
  for (std::size_t g = 0; g < net.n_generators(); ++g)
    if (net.generators[g].in_service)
      cost += net.generators[g].cost.eval_mw(p_g[g] * net.base_mva);
  return cost;
}

namespace {

nlohmann::ordered_json category_json(const CategoryReport& cat) {
  nlohmann::ordered_json j;
  j["count"] = cat.count;
  j["max"] = cat.max_violation;
  j["sum"] = cat.sum_violation;
  nlohmann::ordered_json det = nlohmann::ordered_json::array();
  for (const ViolationDetail& d : cat.details)
    det.push_back({{"element", d.element}, {"magnitude", d.magnitude}});
  j["details"] = std::move(det);
  return j;
}

}  // namespace

std::string violations_to_json(const ViolationReport& report) {
  nlohmann::ordered_json j;
  j["active"] = category_json(report.active);
  j["reactive"] = category_json(report.reactive);
  j["voltage"] = category_json(report.voltage);
  j["thermal"] = category_json(report.thermal);
  return j.dump(2);
}

std::string violations_to_csv_rows(const std::string& dc_variant,
                                   const std::string& ac_variant,
                                   const ViolationReport& report) {
  std::ostringstream out;
  const std::pair<const char*, const CategoryReport*> cats[] = {
      {"active", &report.active},
      {"reactive", &report.reactive},
      {"voltage", &report.voltage},
      {"thermal", &report.thermal}};
  out.precision(17);
  for (const auto& [name, cat] : cats)
    out << dc_variant << ',' << ac_variant << ',' << name << ',' << cat->count
        << ',' << cat->max_violation << ',' << cat->sum_violation << '\n';
  return out.str();
}

}  // namespace dc2ac
