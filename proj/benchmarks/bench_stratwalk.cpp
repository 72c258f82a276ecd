#include <benchmark/benchmark.h>

#include "stratwalk/criterion.hpp"
#include "stratwalk/dispersion.hpp"
#include "stratwalk/measure.hpp"
#include "stratwalk/montecarlo.hpp"

using namespace stratwalk;

namespace {

std::shared_ptr<const ContinuedFraction> golden() {
  static const auto cf = std::make_shared<const ContinuedFraction>(
      ContinuedFraction::from_family(QuotientFamily{QuotientFamily::Kind::Constant, 1}, 40));
  return cf;
}

std::shared_ptr<const PiecewiseBV> fn(PiecewiseBV f) { return std::make_shared<const PiecewiseBV>(std::move(f)); }

std::shared_ptr<Environment> flat_indicator() {
  return Environment::vertically_flat(fn(PiecewiseBV::indicator_pm().scaled(0.5)), golden(), 0.3, 1.0 / 3.0, 0.2);
}

std::shared_ptr<Environment> general_indicator() {
  return Environment::general(fn(PiecewiseBV::indicator_pm().scaled(0.5)),
                              fn(PiecewiseBV::indicator(0.0, 0.5).scaled(0.3)), golden(), 0.3, 1.0 / 3.0, 0.05);
}

void BM_Philox(benchmark::State& st) {
  Philox4x32 rng(42, 0);
  double s = 0;
  for (auto _ : st) s += rng.uniform();
  benchmark::DoNotOptimize(s);
  st.SetItemsProcessed(st.iterations());
}
BENCHMARK(BM_Philox);

void BM_Birkhoff(benchmark::State& st) {
  Cocycle c(fn(PiecewiseBV::sawtooth()), golden(), 0.3);
  std::int64_t n = 1;
  for (auto _ : st) {
    benchmark::DoNotOptimize(birkhoff(c, n));
    n = n * 7 % 1000003;
  }
}
BENCHMARK(BM_Birkhoff);

void BM_DispersionFlat(benchmark::State& st) {
  auto env = flat_indicator();
  for (auto _ : st) benchmark::DoNotOptimize(DispersionTable::build(*env, st.range(0)));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_DispersionFlat)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

void BM_DispersionGeneral(benchmark::State& st) {
  auto env = general_indicator();
  DispersionOptions o;
  o.mode = DispersionOptions::Mode::General;
  for (auto _ : st) benchmark::DoNotOptimize(DispersionTable::build(*env, st.range(0), o));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_DispersionGeneral)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

void BM_ClassifyFlat(benchmark::State& st) {
  auto env = flat_indicator();
  Budget b;
  for (auto _ : st) benchmark::DoNotOptimize(classify(*env, b).verdict);
}
BENCHMARK(BM_ClassifyFlat)->Unit(benchmark::kMillisecond);

void BM_WalkSteps(benchmark::State& st) {
  auto env = flat_indicator();
  std::uint64_t stream = 0;
  for (auto _ : st) benchmark::DoNotOptimize(run(*env, st.range(0), 7, stream++).returns);
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_WalkSteps)->Arg(1000000)->Unit(benchmark::kMillisecond);

void BM_NuEmpirical(benchmark::State& st) {
  const auto f = PiecewiseBV::indicator_pm().scaled(0.5);
  for (auto _ : st) benchmark::DoNotOptimize(nu_f_empirical(f, *golden(), 0.3, st.range(0)));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_NuEmpirical)->Arg(1000000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
