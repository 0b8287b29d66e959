#pragma once

#include <string>
#include <vector>

#include "dc2ac/ac_powerflow.hpp"
#include "dc2ac/network.hpp"

namespace dc2ac {

struct ViolationDetail {
  int element = 0;        // generator, bus or branch index
  double magnitude = 0.0; // p.u. (thermal: fraction of rating)
};

struct CategoryReport {
  int count = 0;
  double max_violation = 0.0;
  double sum_violation = 0.0;
  std::vector<ViolationDetail> details;
};

// Limit violations of a solved AC state. Active/reactive are generator bound
// excursions, voltage is bus magnitude outside [v_min, v_max], thermal is
// apparent branch flow above the rating (checked at both ends, rated
// branches only). Tolerances: 1e-6 p.u., 1e-4 relative for thermal.
struct ViolationReport {
  CategoryReport active, reactive, voltage, thermal;
  int total_count() const {
    return active.count + reactive.count + voltage.count + thermal.count;
  }
};

ViolationReport check_violations(const NetworkCase& net, const PowerFlowState& state);

// A benchmark dispatch to compare against: per-generator outputs and cost.
struct ReferenceDispatch {
  std::string source;            // case name recorded in the file
  std::vector<int> gen_bus;      // external bus id per entry
  std::vector<int> gen_index;    // generator index per entry
  std::vector<double> p_g_ref;   // p.u.
  double cost_ref = 0.0;         // $/h
};

// base_mva converts the file's MW figures to per-unit.
ReferenceDispatch parse_reference_json(const std::string& text, double base_mva);
ReferenceDispatch load_reference_file(const std::string& path, double base_mva);

// Throws DimensionMismatch when the reference does not match the case.
void validate_reference(const NetworkCase& net, const ReferenceDispatch& ref);

// Mean absolute deviation of generator outputs from the reference, p.u.
double compute_mae(const std::vector<double>& p_g, const ReferenceDispatch& ref);

// Relative cost difference (cost - cost_ref) / cost_ref; throws
// ZeroReferenceCost when cost_ref is zero.
double compute_cost_difference(double cost, const ReferenceDispatch& ref);

// Cost of a dispatch under the case's cost curves, $/h.
double dispatch_cost(const NetworkCase& net, const std::vector<double>& p_g);

std::string violations_to_json(const ViolationReport& report);

// Four CSV lines (one per category): dc,ac,category,count,max,sum.
std::string violations_to_csv_rows(const std::string& dc_variant,
                                   const std::string& ac_variant,
                                   const ViolationReport& report);

}  // namespace dc2ac
