#pragma once

#include <cstdint>
#include <vector>

#include "dc2ac/network.hpp"

namespace dc2ac {

struct ScenarioConfig {
  double sigma = 0.05;    // load multiplier standard deviation
  double pf_min = 0.95;   // per-bus power factor range for perturbed loads
  double pf_max = 1.0;
  int n_samples = 0;      // 0 = nominal loads only
  std::uint64_t seed = 1;
};

// One perturbed-load realization. Buses with positive nominal active demand
// get a truncated-normal multiplier (mean 1, redrawn until positive) and a
// uniformly drawn power factor that sets the reactive demand; other buses
// keep their nominal loads.
struct Scenario {
  int index = 0;
  std::vector<double> p_d, q_d;          // full per-bus demand vectors, p.u.
  std::vector<int> perturbed;            // bus indices that were redrawn
  std::vector<double> multipliers;       // per perturbed bus
  std::vector<double> power_factors;     // per perturbed bus
  std::uint64_t digest = 0;              // content hash for reproducibility

  // Copy of the case with this scenario's demands, finalized.
  NetworkCase apply(const NetworkCase& net) const;
};

Scenario make_scenario(const NetworkCase& net, const ScenarioConfig& cfg, int index);

// Scenarios 0..n_samples-1; each draws from its own stream so the batch is
// identical no matter how it is parallelized or chunked.
std::vector<Scenario> generate_batch(const NetworkCase& net, const ScenarioConfig& cfg);

}  // namespace dc2ac
