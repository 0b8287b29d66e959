#include <benchmark/benchmark.h>

#include <cstdio>
#include <string>

#include "dc2ac/ac_powerflow.hpp"
#include "dc2ac/admittance.hpp"
#include "dc2ac/dc_dispatch.hpp"
#include "dc2ac/dc_network.hpp"
#include "dc2ac/matpower.hpp"
#include "dc2ac/pipeline.hpp"

using namespace dc2ac;

namespace {

const NetworkCase& case118() {
  static const NetworkCase net =
      load_matpower_file(std::string(DC2AC_DATA_DIR) + "/case118.m");
  return net;
}

std::string case118_text() {
  static const std::string text = [] {
    std::FILE* f =
        std::fopen((std::string(DC2AC_DATA_DIR) + "/case118.m").c_str(), "rb");
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) out.append(buf, n);
    std::fclose(f);
    return out;
  }();
  return text;
}

void BM_ParseCase118(benchmark::State& state) {
  const std::string text = case118_text();
  for (auto _ : state) {
    NetworkCase net = parse_matpower(text);
    benchmark::DoNotOptimize(net);
  }
}
BENCHMARK(BM_ParseCase118);

void BM_Admittance118(benchmark::State& state) {
  const NetworkCase& net = case118();
  for (auto _ : state) {
    AdmittanceMatrix y = build_admittance(net);
    benchmark::DoNotOptimize(y);
  }
}
BENCHMARK(BM_Admittance118);

void BM_Ptdf118(benchmark::State& state) {
  const NetworkCase& net = case118();
  const int slack = net.ref_bus();
  for (auto _ : state) {
    PtdfMatrix ptdf = build_ptdf(net, slack);
    benchmark::DoNotOptimize(ptdf);
  }
}
BENCHMARK(BM_Ptdf118);

void BM_DcBase118(benchmark::State& state) {
  const NetworkCase& net = case118();
  for (auto _ : state) {
    DcSolution s = solve_dc_base(net);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_DcBase118);

void BM_DcLqcp118(benchmark::State& state) {
  const NetworkCase& net = case118();
  for (auto _ : state) {
    DcSolution s = solve_dc_lqcp(net);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_DcLqcp118);

void BM_AcSpf118(benchmark::State& state) {
  const NetworkCase& net = case118();
  const DcSolution dc = solve_dc_base(net);
  for (auto _ : state) {
    PowerFlowState st = run_acpf(net, dc, AcVariant::Spf);
    benchmark::DoNotOptimize(st);
  }
}
BENCHMARK(BM_AcSpf118);

void BM_Pipeline118(benchmark::State& state) {
  const NetworkCase& net = case118();
  for (auto _ : state) {
    RunRecord rec =
        run_pipeline(net, DcVariant::Base, AcVariant::Spf, SolverOptions{});
    benchmark::DoNotOptimize(rec);
  }
}
BENCHMARK(BM_Pipeline118);

}  // namespace

BENCHMARK_MAIN();
