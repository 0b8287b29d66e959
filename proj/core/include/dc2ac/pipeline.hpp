#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dc2ac/ac_powerflow.hpp"
#include "dc2ac/dc_dispatch.hpp"
#include "dc2ac/feasibility.hpp"
#include "dc2ac/scenarios.hpp"

namespace dc2ac {

// One (scenario, DC variant, AC variant) pipeline outcome.
struct RunRecord {
  std::string case_name;
  DcVariant dc = DcVariant::Base;
  AcVariant ac = AcVariant::Base;
  int sample = -1;  // -1 = nominal loads
  bool converged = false;
  std::string failure;  // empty when converged; otherwise stage: message
  int inner_iters = 0;
  int outer_iters = 0;
  ViolationReport violations;
  std::optional<double> mae;  // only with a reference dispatch
  std::optional<double> cd;
  double dc_objective = 0.0;  // $/h
  double ac_cost = 0.0;       // $/h, restored dispatch
  double ell_tot = 0.0;       // p.u.
  std::uint64_t scenario_digest = 0;
  double time_s = 0.0;
};

struct RunMetadata {
  std::string case_name;
  std::uint64_t seed = 1;
  double sigma = 0.0;
  double pf_min = 0.95, pf_max = 1.0;
  int samples = 0;
  double tol = 1e-6, eps_q = 1e-4, eps_v = 1e-5;
  int max_inner = 30, max_outer = 50;
  std::string warm_start = "flat";
  std::string rng;
  std::string version;
};

struct BatchResult {
  RunMetadata meta;
  std::vector<RunRecord> records;  // ordered by (sample, dc, ac)
};

// Per-(dc, ac) aggregate over converged records.
struct VariantSummary {
  DcVariant dc = DcVariant::Base;
  AcVariant ac = AcVariant::Base;
  int n = 0;
  int n_converged = 0;
  double convergence_rate = 0.0;
  double mean_inner = 0.0, mean_outer = 0.0;
  double mean_time_s = 0.0;
  // mean/min/max of per-record summed violation magnitude, per category.
  double p_mean = 0.0, p_min = 0.0, p_max = 0.0;
  double q_mean = 0.0, q_min = 0.0, q_max = 0.0;
  double v_mean = 0.0, v_min = 0.0, v_max = 0.0;
  double th_mean = 0.0, th_min = 0.0, th_max = 0.0;
  double mean_count_p = 0.0, mean_count_q = 0.0, mean_count_v = 0.0,
         mean_count_th = 0.0;
};

// Full DC -> AC -> violation pipeline for one already-perturbed case.
RunRecord run_pipeline(const NetworkCase& net, DcVariant dc, AcVariant ac,
                       const SolverOptions& opts,
                       const ReferenceDispatch* reference = nullptr);

// Runs every (scenario, dc, ac) combination. n_samples == 0 runs the nominal
// loads as sample -1. `workers` threads split the scenarios; outputs are
// byte-identical regardless of the worker count.
BatchResult run_batch(const NetworkCase& net, const std::vector<DcVariant>& dcs,
                      const std::vector<AcVariant>& acs, const ScenarioConfig& cfg,
                      const SolverOptions& opts,
                      const ReferenceDispatch* reference = nullptr, int workers = 1);

std::vector<VariantSummary> summarize(const BatchResult& batch);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

// CSV with one comment line of metadata, a header, and one row per record.
std::string batch_to_csv(const BatchResult& batch);

// JSON document with metadata, records and the per-variant summary.
std::string batch_to_json(const BatchResult& batch);

std::string summary_table(const BatchResult& batch);  // human-readable

void write_text_file(const std::string& path, const std::string& content);

}  // namespace dc2ac
