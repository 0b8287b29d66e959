#include "dc2ac/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <exception>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dc2ac/errors.hpp"
#include "dc2ac/rng.hpp"
#include "dc2ac/version.hpp"

namespace dc2ac {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Runs every (dc, ac) combination on one already-perturbed case, writing
// outcomes into `out` (dc-major, ac-minor; identity fields already set).
void run_case(const NetworkCase& net, const std::vector<DcVariant>& dcs,
              const std::vector<AcVariant>& acs, const SolverOptions& opts,
              const ReferenceDispatch* reference, RunRecord* out) {
  const std::size_t nac = acs.size();
  std::optional<DcSolution> base;  // shared lossless reference solve
  for (std::size_t di = 0; di < dcs.size(); ++di) {
    bool dc_ok = false;
    DcSolution dc_sol;
    std::string dc_error;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (dcs[di] == DcVariant::Lqcp) {
        dc_sol = solve_dc(net, dcs[di]);
      } else {
        if (!base) base = solve_dc_base(net);
        dc_sol = dcs[di] == DcVariant::Base ? *base
                                            : solve_dc(net, dcs[di], &*base);
      }
      dc_ok = true;
    } catch (const std::exception& e) {
      dc_error = e.what();
    }
    const double dc_seconds = seconds_since(t0);

    std::optional<PowerFlowState> warm;  // lossless AC solve for warm starts
    bool warm_tried = false;
    for (std::size_t ai = 0; ai < nac; ++ai) {
      RunRecord& rec = out[di * nac + ai];
      if (!dc_ok) {
        rec.failure = "dc: " + dc_error;
        rec.time_s = dc_seconds;
        continue;
      }
      rec.dc_objective = dc_sol.objective;
      const auto t1 = std::chrono::steady_clock::now();
      try {
        SolverOptions run_opts = opts;
        const PowerFlowState* initial = nullptr;
        if (opts.warm_start == WarmStart::FromState &&
            acs[ai] != AcVariant::Base) {
          if (!warm_tried) {
            warm_tried = true;
            SolverOptions warm_opts = opts;
            warm_opts.warm_start = WarmStart::Flat;
            try {
              warm = run_acpf(net, dc_sol, AcVariant::Base, warm_opts);
            } catch (const std::exception&) {
              warm.reset();  // fall back to a flat start
            }
          }
          if (warm)
            initial = &*warm;
          else
            run_opts.warm_start = WarmStart::Flat;
        } else {
          run_opts.warm_start = WarmStart::Flat;
        }
        const PowerFlowState state =
            run_acpf(net, dc_sol, acs[ai], run_opts, initial);
        rec.converged = state.converged;
        rec.inner_iters = state.inner_iters;
        rec.outer_iters = state.outer_iters;
        rec.ell_tot = state.allocation.ell_tot;
        if (state.converged) {
          rec.violations = check_violations(net, state);
          rec.ac_cost = dispatch_cost(net, state.p_g);
          if (reference) {
            rec.mae = compute_mae(state.p_g, *reference);
            rec.cd = compute_cost_difference(rec.ac_cost, *reference);
          }
        } else {
          rec.failure = "ac: solver returned without convergence";
        }
      } catch (const std::exception& e) {
        rec.converged = false;
        rec.failure = "ac: " + std::string(e.what());
      }
      rec.time_s = dc_seconds + seconds_since(t1);
    }
  }
}

}  // namespace

RunRecord run_pipeline(const NetworkCase& net, DcVariant dc, AcVariant ac,
                       const SolverOptions& opts,
                       const ReferenceDispatch* reference) {
  ScenarioConfig cfg;
  cfg.n_samples = 0;
  BatchResult batch = run_batch(net, {dc}, {ac}, cfg, opts, reference, 1);
  return batch.records.front();
}

BatchResult run_batch(const NetworkCase& net, const std::vector<DcVariant>& dcs,
                      const std::vector<AcVariant>& acs,
                      const ScenarioConfig& cfg, const SolverOptions& opts,
                      const ReferenceDispatch* reference, int workers) {
  if (dcs.empty() || acs.empty()) throw MalformedCase("no variants selected");
  if (reference) validate_reference(net, *reference);

  BatchResult out;
  out.meta.case_name = net.name;
  out.meta.seed = cfg.seed;
  out.meta.sigma = cfg.sigma;
  out.meta.pf_min = cfg.pf_min;
  out.meta.pf_max = cfg.pf_max;
  out.meta.samples = cfg.n_samples;
  out.meta.tol = opts.tol;
  out.meta.eps_q = opts.eps_q;
  out.meta.eps_v = opts.eps_v;
  out.meta.max_inner = opts.max_inner;
  out.meta.max_outer = opts.max_outer;
  out.meta.warm_start = opts.warm_start == WarmStart::Flat ? "flat" : "acbase";
  out.meta.rng = kRngDescription;
  out.meta.version = kVersion;

  std::vector<Scenario> scenarios;
  if (cfg.n_samples > 0) scenarios = generate_batch(net, cfg);
  const int n_sc = cfg.n_samples > 0 ? cfg.n_samples : 1;
  const std::size_t per = dcs.size() * acs.size();
  out.records.assign(static_cast<std::size_t>(n_sc) * per, RunRecord{});

  auto process = [&](int s) {
    RunRecord* slot = out.records.data() + static_cast<std::size_t>(s) * per;
    for (std::size_t k = 0; k < per; ++k) {
      slot[k].case_name = net.name;
      slot[k].sample = cfg.n_samples > 0 ? s : -1;
      slot[k].scenario_digest = cfg.n_samples > 0 ? scenarios[s].digest : 0;
      slot[k].dc = dcs[k / acs.size()];
      slot[k].ac = acs[k % acs.size()];
    }
    NetworkCase perturbed;
    const NetworkCase* target = &net;
    if (cfg.n_samples > 0) {
      try {
        perturbed = scenarios[s].apply(net);
      } catch (const std::exception& e) {
        for (std::size_t k = 0; k < per; ++k)
          slot[k].failure = "parse: " + std::string(e.what());
        return;
      }
      target = &perturbed;
    }
    run_case(*target, dcs, acs, opts, reference, slot);
  };

  const int n_workers = std::clamp(workers, 1, n_sc);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> fatal(static_cast<std::size_t>(n_sc));
  auto drain = [&]() {
    for (;;) {
      const int s = next.fetch_add(1);
      if (s >= n_sc) return;
      try {
        process(s);
      } catch (...) {
        fatal[s] = std::current_exception();
      }
    }
  };

  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(drain);
  drain();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : fatal)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<VariantSummary> summarize(const BatchResult& batch) {
  struct Acc {
    VariantSummary s;
    double sums[4] = {0, 0, 0, 0};
    double mins[4] = {0, 0, 0, 0};
    double maxs[4] = {0, 0, 0, 0};
    double counts[4] = {0, 0, 0, 0};
    bool any = false;
  };
  std::vector<Acc> accs;
  for (const RunRecord& r : batch.records) {
    Acc* acc = nullptr;
    for (Acc& a : accs)
      if (a.s.dc == r.dc && a.s.ac == r.ac) acc = &a;
    if (!acc) {
      accs.emplace_back();
      acc = &accs.back();
      acc->s.dc = r.dc;
      acc->s.ac = r.ac;
    }
    ++acc->s.n;
    if (!r.converged) continue;
    ++acc->s.n_converged;
    acc->s.mean_inner += r.inner_iters;
    acc->s.mean_outer += r.outer_iters;
    acc->s.mean_time_s += r.time_s;
    const CategoryReport* cats[4] = {&r.violations.active, &r.violations.reactive,
                                     &r.violations.voltage, &r.violations.thermal};
    for (int c = 0; c < 4; ++c) {
      const double v = cats[c]->sum_violation;
      acc->sums[c] += v;
      acc->counts[c] += cats[c]->count;
      if (!acc->any) {
        acc->mins[c] = v;
        acc->maxs[c] = v;
      } else {
        acc->mins[c] = std::min(acc->mins[c], v);
        acc->maxs[c] = std::max(acc->maxs[c], v);
      }
    }
    acc->any = true;
  }

  std::vector<VariantSummary> out;
  out.reserve(accs.size());
  for (Acc& a : accs) {
    VariantSummary& s = a.s;
    s.convergence_rate = s.n > 0 ? static_cast<double>(s.n_converged) / s.n : 0.0;
    const double d = s.n_converged > 0 ? s.n_converged : 1.0;
    s.mean_inner /= d;
    s.mean_outer /= d;
    s.mean_time_s /= d;
    s.p_mean = a.sums[0] / d;
    s.q_mean = a.sums[1] / d;
    s.v_mean = a.sums[2] / d;
    s.th_mean = a.sums[3] / d;
    s.p_min = a.mins[0], s.p_max = a.maxs[0];
    s.q_min = a.mins[1], s.q_max = a.maxs[1];
    s.v_min = a.mins[2], s.v_max = a.maxs[2];
    s.th_min = a.mins[3], s.th_max = a.maxs[3];
    s.mean_count_p = a.counts[0] / d;
    s.mean_count_q = a.counts[1] / d;
    s.mean_count_v = a.counts[2] / d;
    s.mean_count_th = a.counts[3] / d;
    out.push_back(s);
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const std::to_chars_result res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string batch_to_csv(const BatchResult& batch) {
  std::ostringstream out;
  const RunMetadata& m = batch.meta;
  out << "# case=" << m.case_name << " seed=" << m.seed
      << " sigma=" << format_double(m.sigma)
      << " pf_min=" << format_double(m.pf_min)
      << " pf_max=" << format_double(m.pf_max) << " samples=" << m.samples
      << " tol=" << format_double(m.tol) << " eps_q=" << format_double(m.eps_q)
      << " eps_v=" << format_double(m.eps_v) << " max_inner=" << m.max_inner
      << " max_outer=" << m.max_outer << " warm_start=" << m.warm_start
      << " rng=" << m.rng << " version=" << m.version << '\n';
  out << "case,dc,ac,sample,converged,inner_iters,outer_iters,"
         "viol_p_count,viol_p_max,viol_p_sum,"
         "viol_q_count,viol_q_max,viol_q_sum,"
         "viol_v_count,viol_v_max,viol_v_sum,"
         "viol_th_count,viol_th_max,viol_th_sum,mae,cd,time_s\n";
  for (const RunRecord& r : batch.records) {
    out << r.case_name << ',' << to_string(r.dc) << ',' << to_string(r.ac)
        << ',' << r.sample << ',' << (r.converged ? 1 : 0) << ','
        << r.inner_iters << ',' << r.outer_iters;
    const CategoryReport* cats[4] = {&r.violations.active, &r.violations.reactive,
                                     &r.violations.voltage, &r.violations.thermal};
    for (const CategoryReport* c : cats)
      out << ',' << c->count << ',' << format_double(c->max_violation) << ','
          << format_double(c->sum_violation);
    out << ',' << (r.mae ? format_double(*r.mae) : std::string()) << ','
        << (r.cd ? format_double(*r.cd) : std::string()) << ','
        << format_double(r.time_s) << '\n';
  }
  return out.str();
}

namespace {

std::string digest_hex(std::uint64_t digest) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << digest;
  return out.str();
}

}  // namespace

std::string batch_to_json(const BatchResult& batch) {
  const RunMetadata& m = batch.meta;
  nlohmann::ordered_json j;
  j["metadata"] = {{"case", m.case_name},
                   {"seed", m.seed},
                   {"sigma", m.sigma},
                   {"pf_min", m.pf_min},
                   {"pf_max", m.pf_max},
                   {"samples", m.samples},
                   {"tol", m.tol},
                   {"eps_q", m.eps_q},
                   {"eps_v", m.eps_v},
                   {"max_inner", m.max_inner},
                   {"max_outer", m.max_outer},
                   {"warm_start", m.warm_start},
                   {"rng", m.rng},
                   {"version", m.version}};

  nlohmann::ordered_json recs = nlohmann::ordered_json::array();
  for (const RunRecord& r : batch.records) {
    nlohmann::ordered_json rj;
    rj["case"] = r.case_name;
    rj["dc"] = to_string(r.dc);
    rj["ac"] = to_string(r.ac);
    rj["sample"] = r.sample;
    rj["converged"] = r.converged;
    rj["failure"] = r.failure;
    rj["inner_iters"] = r.inner_iters;
    rj["outer_iters"] = r.outer_iters;
    nlohmann::ordered_json vj;
    const std::pair<const char*, const CategoryReport*> cats[] = {
        {"active", &r.violations.active},
        {"reactive", &r.violations.reactive},
        {"voltage", &r.violations.voltage},
        {"thermal", &r.violations.thermal}};
    for (const auto& [name, c] : cats)
      vj[name] = {{"count", c->count},
                  {"max", c->max_violation},
                  {"sum", c->sum_violation}};
    rj["violations"] = std::move(vj);
    if (r.mae)
      rj["mae"] = *r.mae;
    else
      rj["mae"] = nullptr;
    if (r.cd)
      rj["cd"] = *r.cd;
    else
      rj["cd"] = nullptr;
    rj["dc_objective"] = r.dc_objective;
    rj["ac_cost"] = r.ac_cost;
    rj["ell_tot"] = r.ell_tot;
    rj["scenario_digest"] = digest_hex(r.scenario_digest);
    rj["time_s"] = r.time_s;
    recs.push_back(std::move(rj));
  }
  j["records"] = std::move(recs);

  nlohmann::ordered_json sj = nlohmann::ordered_json::array();
  for (const VariantSummary& s : summarize(batch)) {
    sj.push_back(
        {{"dc", to_string(s.dc)},
         {"ac", to_string(s.ac)},
         {"n", s.n},
         {"n_converged", s.n_converged},
         {"convergence_rate", s.convergence_rate},
         {"mean_inner", s.mean_inner},
         {"mean_outer", s.mean_outer},
         {"mean_time_s", s.mean_time_s},
         {"active",
          {{"mean", s.p_mean}, {"min", s.p_min}, {"max", s.p_max},
           {"mean_count", s.mean_count_p}}},
         {"reactive",
          {{"mean", s.q_mean}, {"min", s.q_min}, {"max", s.q_max},
           {"mean_count", s.mean_count_q}}},
         {"voltage",
          {{"mean", s.v_mean}, {"min", s.v_min}, {"max", s.v_max},
           {"mean_count", s.mean_count_v}}},
         {"thermal",
          {{"mean", s.th_mean}, {"min", s.th_min}, {"max", s.th_max},
           {"mean_count", s.mean_count_th}}}});
  }
  j["summary"] = std::move(sj);
  return j.dump(2);
}

std::string summary_table(const BatchResult& batch) {
  std::ostringstream out;
  out << std::left << std::setw(6) << "dc" << std::setw(6) << "ac" << std::right
      << std::setw(9) << "conv" << std::setw(9) << "inner" << std::setw(7)
      << "outer" << std::setw(8) << "p_cnt" << std::setw(8) << "q_cnt"
      << std::setw(8) << "v_cnt" << std::setw(8) << "th_cnt" << std::setw(11)
      << "time_s" << '\n';
  for (const VariantSummary& s : summarize(batch)) {
    std::ostringstream conv;
    conv << s.n_converged << '/' << s.n;
    out << std::left << std::setw(6) << to_string(s.dc) << std::setw(6)
        << to_string(s.ac) << std::right << std::setw(9) << conv.str()
        << std::setw(9) << std::fixed << std::setprecision(1) << s.mean_inner
        << std::setw(7) << std::setprecision(1) << s.mean_outer << std::setw(8)
        << std::setprecision(2) << s.mean_count_p << std::setw(8)
        << s.mean_count_q << std::setw(8) << s.mean_count_v << std::setw(8)
        << s.mean_count_th << std::setw(11) << std::setprecision(4)
        << s.mean_time_s << '\n';
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoFailure("cannot write '" + path + "'");
}

}  // namespace dc2ac
