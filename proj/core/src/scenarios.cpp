#include "dc2ac/scenarios.hpp"

#include <cmath>
#include <cstring>

#include "dc2ac/errors.hpp"
#include "dc2ac/rng.hpp"

namespace dc2ac {
namespace {

void check_config(const ScenarioConfig& cfg) {
  if (cfg.sigma < 0.0) throw MalformedCase("sigma must be non-negative");
  if (!(cfg.pf_min > 0.0 && cfg.pf_min <= cfg.pf_max && cfg.pf_max <= 1.0))
    throw MalformedCase("power-factor band must satisfy 0 < pf_min <= pf_max <= 1");
  if (cfg.n_samples < 0) throw MalformedCase("sample count must be non-negative");
}

std::uint64_t fnv1a_accumulate(std::uint64_t h, double value) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(value));
  std::memcpy(&bits, &value, sizeof(bits));
  for (int i = 0; i < 8; ++i) {
    h ^= (bits >> (8 * i)) & 0xffu;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Scenario make_scenario(const NetworkCase& net, const ScenarioConfig& cfg, int index) {
  check_config(cfg);
  if (index < 0) throw MalformedCase("scenario index must be non-negative");

  Scenario sc;
  sc.index = index;
  sc.p_d.resize(net.n_buses());
  sc.q_d.resize(net.n_buses());

  Xoshiro256pp rng(scenario_stream(cfg.seed, static_cast<std::uint64_t>(index)));
  std::uint64_t digest = 1469598103934665603ULL;
  for (std::size_t i = 0; i < net.n_buses(); ++i) {
    const Bus& bus = net.buses[i];
    sc.p_d[i] = bus.p_d;
    sc.q_d[i] = bus.q_d;
    if (bus.p_d <= 0.0) continue;

    double xi;
    do {
      xi = 1.0 + cfg.sigma * rng.normal();
    } while (xi <= 0.0);
    const double pf = rng.uniform(cfg.pf_min, cfg.pf_max);

    sc.p_d[i] = xi * bus.p_d;
    const double sign = bus.q_d < 0.0 ? -1.0 : 1.0;
    sc.q_d[i] = sign * sc.p_d[i] * std::tan(std::acos(pf));

    sc.perturbed.push_back(static_cast<int>(i));
    sc.multipliers.push_back(xi);
    sc.power_factors.push_back(pf);
    digest = fnv1a_accumulate(digest, xi);
    digest = fnv1a_accumulate(digest, pf);
  }
  sc.digest = digest;
  return sc;
}

NetworkCase Scenario::apply(const NetworkCase& net) const {
  if (p_d.size() != net.n_buses() || q_d.size() != net.n_buses())
    throw DimensionMismatch("scenario was built for a different bus count");
  NetworkCase out = net;
  for (std::size_t i = 0; i < out.buses.size(); ++i) {
    out.buses[i].p_d = p_d[i];
    out.buses[i].q_d = q_d[i];
  }
  out.finalize();
  return out;
}

std::vector<Scenario> generate_batch(const NetworkCase& net, const ScenarioConfig& cfg) {
  check_config(cfg);
  std::vector<Scenario> batch;
  batch.reserve(static_cast<std::size_t>(cfg.n_samples));
  for (int k = 0; k < cfg.n_samples; ++k)
    batch.push_back(make_scenario(net, cfg, k));
  return batch;
}

}  // namespace dc2ac
