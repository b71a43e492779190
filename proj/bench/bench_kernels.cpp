// Serial reference vs OpenMP path for each parallel kernel.
#include <benchmark/benchmark.h>

#include "collabrep/crc.hpp"
#include "collabrep/dictlearn.hpp"
#include "collabrep/metrics.hpp"

using namespace collabrep;

namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

const LabeledDataset& dataset() {
  static const LabeledDataset data = synth_gaussian({20, 200, 60, 6.0, 11});
  return data;
}

void BM_batch_classify_crc_l2(benchmark::State& state) {
  const auto [train, test] = split(dataset(), 30, 0);
  const CrcL2Model model = CrcL2Model::fit(train, 1e-2);
  for (auto _ : state) benchmark::DoNotOptimize(batch_classify(model, test, mode(state)).accuracy);
  state.SetItemsProcessed(state.iterations() * test.size());
}

void BM_mpd_classify_set(benchmark::State& state) {
  const auto [train, test] = split(dataset(), 30, 0);
  const MpdClassifier mpd(train);
  for (auto _ : state) benchmark::DoNotOptimize(mpd.classify_set(test.features(), mode(state)).label);
  state.SetItemsProcessed(state.iterations() * test.size());
}

void BM_dlnscr_coefficient_step(benchmark::State& state) {
  const std::vector<Index> sizes(20, 5);
  const BlockDictionary D = init_dictionary_pca(dataset(), sizes, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        update_coefficients(dataset(), D, 1e-2, CoefficientRule::block_confusion, mode(state)).values.data());
  }
}

void BM_dlnscr_fit(benchmark::State& state) {
  DlConfig config;
  config.block_sizes = std::vector<Index>(20, 5);
  config.max_iters = 5;
  config.rel_tol = 0.0;
  config.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(fit_dlnscr(dataset(), config).trace.iterations);
}

}  // namespace

// Arg 0 = serial reference, 1 = OpenMP.
BENCHMARK(BM_batch_classify_crc_l2)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mpd_classify_set)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dlnscr_coefficient_step)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dlnscr_fit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
