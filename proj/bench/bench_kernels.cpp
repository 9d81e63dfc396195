// Serial reference vs OpenMP version of each data-parallel kernel.
#include "metasum/bleu.hpp"
#include "metasum/diff/kernels.hpp"
#include "metasum/evaluation.hpp"
#include "metasum/features.hpp"
#include "metasum/labeling.hpp"
#include "metasum/random.hpp"
#include "metasum/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace metasum;
namespace k = metasum::diff::kernels;

namespace {

const Dataset& bench_dataset()
{
    static const Dataset ds = [] {
        synth::SyntheticOptions opt;
        opt.segments = 4000;
        return synth::generate_synthetic_benchmark(opt);
    }();
    return ds;
}

std::vector<bleu::Pair> bench_pairs()
{
    const auto& ds = bench_dataset();
    std::vector<bleu::Pair> pairs;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (const auto& c : ds.candidate_sets[i].candidates)
            pairs.push_back({c.tokens, ds.segments[i].reference_tokens});
    return pairs;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    std::vector<double> a(n * n), b(n * n), c(n * n);
    for (auto& x : a)
        x = rng.uniform(-1, 1);
    for (auto& x : b)
        x = rng.uniform(-1, 1);
    for (auto _ : state) {
        if constexpr (Parallel)
            k::gemm(a.data(), b.data(), c.data(), n, n, n, false);
        else
            k::gemm_serial(a.data(), b.data(), c.data(), n, n, n, false);
        benchmark::DoNotOptimize(c.data());
    }
    state.counters["GFLOP/s"] = benchmark::Counter(2.0 * n * n * n, benchmark::Counter::kIsIterationInvariantRate,
                                                   benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Gemm<false>)->Name("gemm/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<true>)->Name("gemm/omp")->Arg(64)->Arg(256);

template <bool Parallel>
void BM_CorpusBleu(benchmark::State& state)
{
    const auto pairs = bench_pairs();
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? bleu::corpus_stats(pairs) : bleu::corpus_stats_serial(pairs));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size()));
}
BENCHMARK(BM_CorpusBleu<false>)->Name("corpus_bleu/serial");
BENCHMARK(BM_CorpusBleu<true>)->Name("corpus_bleu/omp");

template <bool Parallel>
void BM_ScoreCandidates(benchmark::State& state)
{
    const auto& ds = bench_dataset();
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? score_dataset(ds) : score_dataset_serial(ds));
}
BENCHMARK(BM_ScoreCandidates<false>)->Name("score_candidates/serial");
BENCHMARK(BM_ScoreCandidates<true>)->Name("score_candidates/omp");

template <bool Parallel>
void BM_Sigtest(benchmark::State& state)
{
    const auto& ds = bench_dataset();
    std::vector<std::string> ids;
    for (const auto& s : ds.segments)
        ids.push_back(s.id);
    const std::vector<std::size_t> c0(ids.size(), 0), c1(ids.size(), 1);
    const auto a = eval::outputs_of(ds, ids, c0), b = eval::outputs_of(ds, ids, c1);
    const auto refs = eval::references_of(ds, ids);
    const int iterations = static_cast<int>(state.range(0));
    for (auto _ : state) {
        const auto r = Parallel ? eval::approx_randomization_test(a, b, refs, iterations, 42)
                                : eval::approx_randomization_test_serial(a, b, refs, iterations, 42);
        benchmark::DoNotOptimize(r.p_value);
    }
}
BENCHMARK(BM_Sigtest<false>)->Name("sigtest/serial")->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sigtest<true>)->Name("sigtest/omp")->Arg(1000)->Unit(benchmark::kMillisecond);

template <bool Parallel>
void BM_Features(benchmark::State& state)
{
    const auto& ds = bench_dataset();
    std::vector<std::string> ids;
    std::vector<SegmentRef> items;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        ids.push_back(ds.segments[i].id);
        items.push_back({&ds.segments[i], &ds.candidate_sets[i]});
    }
    const auto ctx = features::build_context(ds, ids);
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? features::extract_all(ctx, items) : features::extract_all_serial(ctx, items));
}
BENCHMARK(BM_Features<false>)->Name("features/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Features<true>)->Name("features/omp")->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
