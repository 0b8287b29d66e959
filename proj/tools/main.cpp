#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dc2ac/matpower.hpp"
#include "dc2ac/pipeline.hpp"
#include "dc2ac/version.hpp"

namespace {

std::vector<dc2ac::DcVariant> pick_dc(const std::string& s) {
  using dc2ac::DcVariant;
  if (s == "all")
    return {DcVariant::Base, DcVariant::Lllf, DcVariant::Lqcp, DcVariant::Lloa};
  return {dc2ac::dc_variant_from_string(s)};
}

std::vector<dc2ac::AcVariant> pick_ac(const std::string& s) {
  using dc2ac::AcVariant;
  if (s == "all")
    return {AcVariant::Base, AcVariant::Bts, AcVariant::Ds, AcVariant::Spf};
  return {dc2ac::ac_variant_from_string(s)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DC dispatch to AC power-flow feasibility restoration"};
  app.set_version_flag("--version", dc2ac::kVersion);

  std::string case_path;
  std::string dc = "all", ac = "all";
  std::string warm = "flat", vset = "unity", format = "csv";
  std::string ref_path, out_dir;
  double sigma = 0.05, pf_min = 0.95, pf_max = 1.0;
  double tol = 1e-6, eps_q = 1e-4, eps_v = 1e-5;
  int samples = 0, max_inner = 30, max_outer = 50, workers = 1;
  std::uint64_t seed = 1;

  app.add_option("--case", case_path, "MATPOWER case file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--dc", dc, "DC dispatch variant")
      ->check(CLI::IsMember({"base", "lllf", "lqcp", "lloa", "all"}))
      ->capture_default_str();
  app.add_option("--ac", ac, "AC power-flow variant")
      ->check(CLI::IsMember({"base", "bts", "ds", "spf", "all"}))
      ->capture_default_str();
  app.add_option("--sigma", sigma, "Load multiplier standard deviation")
      ->capture_default_str();
  app.add_option("--samples", samples, "Perturbed samples; 0 runs nominal loads")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--seed", seed, "Scenario RNG seed")->capture_default_str();
  app.add_option("--pf-min", pf_min, "Power-factor band lower edge")
      ->capture_default_str();
  app.add_option("--pf-max", pf_max, "Power-factor band upper edge")
      ->capture_default_str();
  app.add_option("--tol", tol, "Newton mismatch tolerance, p.u.")
      ->capture_default_str();
  app.add_option("--eps-q", eps_q, "Reactive switching deadband, p.u.")
      ->capture_default_str();
  app.add_option("--eps-v", eps_v, "Voltage switch-back deadband, p.u.")
      ->capture_default_str();
  app.add_option("--max-inner", max_inner, "Newton iteration cap per run")
      ->capture_default_str();
  app.add_option("--max-outer", max_outer, "Switching round cap")
      ->capture_default_str();
  app.add_option("--warm-start", warm,
                 "flat starts every run; acbase reuses the base AC solution")
      ->check(CLI::IsMember({"flat", "acbase"}))
      ->capture_default_str();
  app.add_option("--vset", vset,
                 "Regulated-bus voltage target: unity or case setpoints")
      ->check(CLI::IsMember({"unity", "case"}))
      ->capture_default_str();
  app.add_option("--ref", ref_path, "Reference dispatch JSON for MAE/CD");
  app.add_option("--out", out_dir, "Directory for results.csv / results.json");
  app.add_option("--format", format, "Results file format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--workers", workers, "Scenario worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Collapse CLI11's per-error exit codes onto the documented 0/1 contract.
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const dc2ac::NetworkCase net = dc2ac::load_matpower_file(case_path);
    for (const std::string& w : net.warnings)
      std::cerr << "warning: " << w << '\n';

    std::optional<dc2ac::ReferenceDispatch> ref;
    if (!ref_path.empty())
      ref = dc2ac::load_reference_file(ref_path, net.base_mva);

    dc2ac::ScenarioConfig cfg;
    cfg.sigma = sigma;
    cfg.pf_min = pf_min;
    cfg.pf_max = pf_max;
    cfg.n_samples = samples;
    cfg.seed = seed;

    dc2ac::SolverOptions opts;
    opts.tol = tol;
    opts.eps_q = eps_q;
    opts.eps_v = eps_v;
    opts.max_inner = max_inner;
    opts.max_outer = max_outer;
    opts.warm_start = warm == "acbase" ? dc2ac::WarmStart::FromState
                                       : dc2ac::WarmStart::Flat;
    opts.use_case_vsetpoints = vset == "case";

    const dc2ac::BatchResult batch =
        dc2ac::run_batch(net, pick_dc(dc), pick_ac(ac), cfg, opts,
                         ref ? &*ref : nullptr, workers);

    if (!out_dir.empty()) {
      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      if (format == "csv") {
        const std::filesystem::path file = dir / "results.csv";
        dc2ac::write_text_file(file.string(), dc2ac::batch_to_csv(batch));
        std::cerr << "wrote " << file.string() << '\n';
      } else {
        const std::filesystem::path file = dir / "results.json";
        dc2ac::write_text_file(file.string(), dc2ac::batch_to_json(batch));
        std::cerr << "wrote " << file.string() << '\n';
      }
    }

    std::cout << dc2ac::summary_table(batch);
    for (const dc2ac::RunRecord& r : batch.records)
      if (!r.converged) return 2;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
