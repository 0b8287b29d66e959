#include "dc2ac/network.hpp"

#include <cmath>

#include "dc2ac/errors.hpp"

namespace dc2ac {

void NetworkCase::finalize() {
  finalized_ = false;
  warnings.clear();
  id_to_index_.clear();
  gens_at_bus_.clear();
  ref_idx_ = -1;

  if (buses.empty()) throw MalformedCase("case '" + name + "' has no buses");
  if (!(base_mva > 0.0)) throw MalformedCase("baseMVA must be positive");

  id_to_index_.reserve(buses.size());
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const Bus& b = buses[i];
    if (!id_to_index_.emplace(b.id, static_cast<int>(i)).second)
      throw MalformedCase("duplicate bus id " + std::to_string(b.id));
    if (!(b.v_min > 0.0) || !(b.v_max >= b.v_min))
      throw MalformedCase("bus " + std::to_string(b.id) +
                          " has an invalid voltage band");
    if (b.role == BusRole::REF) {
      if (ref_idx_ >= 0)
        throw MalformedCase("more than one reference bus (" +
                            std::to_string(buses[ref_idx_].id) + " and " +
                            std::to_string(b.id) + ")");
      ref_idx_ = static_cast<int>(i);
    }
    if (b.vm_init < b.v_min - 1e-12 || b.vm_init > b.v_max + 1e-12)
      warnings.push_back("bus " + std::to_string(b.id) +
                         " initial voltage magnitude outside its band");
  }
  if (ref_idx_ < 0) throw NoRefBus("case '" + name + "' declares no reference bus");

  for (const Branch& br : branches) {
    if (!id_to_index_.count(br.from_bus))
      throw DanglingReference("branch endpoint " + std::to_string(br.from_bus) +
                              " is not a bus");
    if (!id_to_index_.count(br.to_bus))
      throw DanglingReference("branch endpoint " + std::to_string(br.to_bus) +
                              " is not a bus");
    if (!(br.tap > 0.0))
      throw MalformedCase("branch " + std::to_string(br.from_bus) + "-" +
                          std::to_string(br.to_bus) + " has a non-positive tap");
    if (br.rate_a < 0.0)
      throw MalformedCase("branch " + std::to_string(br.from_bus) + "-" +
                          std::to_string(br.to_bus) + " has a negative rating");
  }

  gens_at_bus_.resize(buses.size());
  for (std::size_t g = 0; g < generators.size(); ++g) {
    const Generator& gen = generators[g];
    auto it = id_to_index_.find(gen.bus);
    if (it == id_to_index_.end())
      throw DanglingReference("generator " + std::to_string(g) + " sits at bus " +
                              std::to_string(gen.bus) + " which does not exist");
    if (gen.p_min > gen.p_max || gen.q_min > gen.q_max)
      throw MalformedCase("generator " + std::to_string(g) +
                          " has inverted output bounds");
    if (gen.cost.c2 < 0.0)
      throw MalformedCase("generator " + std::to_string(g) +
                          " has a concave cost curve");
    if (gen.in_service) gens_at_bus_[it->second].push_back(static_cast<int>(g));
  }

  finalized_ = true;
}

void NetworkCase::require_finalized() const {
  if (!finalized_)
    throw MalformedCase("case '" + name + "' used before finalize()");
}

int NetworkCase::bus_index(int bus_id) const {
  require_finalized();
  auto it = id_to_index_.find(bus_id);
  if (it == id_to_index_.end())
    throw DanglingReference("unknown bus id " + std::to_string(bus_id));
  return it->second;
}

int NetworkCase::ref_index() const {
  require_finalized();
  return ref_idx_;
}

int NetworkCase::ref_bus() const { return buses[ref_index()].id; }

const std::vector<int>& NetworkCase::generators_at(int bus_idx) const {
  require_finalized();
  return gens_at_bus_[bus_idx];
}

double NetworkCase::total_p_demand() const {
  double s = 0.0;
  for (const Bus& b : buses) s += b.p_d;
  return s;
}

double NetworkCase::total_q_demand() const {
  double s = 0.0;
  for (const Bus& b : buses) s += b.q_d;
  return s;
}

}  // namespace dc2ac
