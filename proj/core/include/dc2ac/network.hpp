#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace dc2ac {

enum class BusRole { PQ, PV, REF };

// Polynomial generation cost  c2*p^2 + c1*p + c0  with p in MW, cost in $/h.
struct CostCurve {
  double c2 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;

  double eval_mw(double p_mw) const { return (c2 * p_mw + c1) * p_mw + c0; }
};

struct Bus {
  int id = 0;           // external bus number, used by branches and generators
  BusRole role = BusRole::PQ;
  double p_d = 0.0;     // active demand, p.u.
  double q_d = 0.0;     // reactive demand, p.u.
  double gs = 0.0;      // shunt conductance, p.u.
  double bs = 0.0;      // shunt susceptance, p.u.
  double vm_init = 1.0; // initial voltage magnitude, p.u.
  double va_init = 0.0; // initial voltage angle, rad
  double v_min = 0.9;
  double v_max = 1.1;
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;        // series resistance, p.u.
  double x = 0.0;        // series reactance, p.u.
  double b_charge = 0.0; // total line charging susceptance, p.u.
  double rate_a = 0.0;   // long-term MVA rating, p.u.; 0 means unlimited
  double tap = 1.0;      // off-nominal tap ratio (from side)
  double shift = 0.0;    // phase shift, rad
  bool in_service = true;
};

struct Generator {
  int bus = 0;
  double p_g = 0.0;   // initial active output, p.u.
  double q_g = 0.0;   // initial reactive output, p.u.
  double p_min = 0.0;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  double v_setpoint = 1.0;  // scheduled voltage magnitude, p.u.
  bool in_service = true;
  CostCurve cost;
};

// A complete case: buses, branches, generators, and the id -> index maps
// built by finalize(). Mutating the public vectors invalidates the maps
// until finalize() is called again.
class NetworkCase {
 public:
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<std::string> warnings;  // non-fatal validation findings

  // Validates the case and rebuilds all internal indexes. Throws
  // MalformedCase / DanglingReference / NoRefBus on invalid input.
  void finalize();

  bool finalized() const { return finalized_; }

  std::size_t n_buses() const { return buses.size(); }
  std::size_t n_branches() const { return branches.size(); }
  std::size_t n_generators() const { return generators.size(); }

  // Index of the bus with the given external id; throws DanglingReference.
  int bus_index(int bus_id) const;
  const Bus& bus(int bus_id) const { return buses[bus_index(bus_id)]; }

  int ref_index() const;  // internal index of the reference bus
  int ref_bus() const;    // external id of the reference bus

  // Indices of in-service generators attached to the bus at internal index.
  const std::vector<int>& generators_at(int bus_idx) const;

  double total_p_demand() const;  // p.u.
  double total_q_demand() const;  // p.u.

 private:
  void require_finalized() const;

  bool finalized_ = false;
  int ref_idx_ = -1;
  std::unordered_map<int, int> id_to_index_;
  std::vector<std::vector<int>> gens_at_bus_;
};

}  // namespace dc2ac
