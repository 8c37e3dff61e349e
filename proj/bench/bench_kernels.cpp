// Serial reference kernels against their OpenMP counterparts. The second
// benchmark argument is the worker count for the parallel variants.

#include "ubmaud/kernels.hpp"
#include "ubmaud/likelihood.hpp"
#include "ubmaud/reference.hpp"
#include "ubmaud/simgen.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace ubmaud;

namespace {

Eigen::MatrixXd noise(long n, int R, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd m(n, R);
    for (long i = 0; i < n; ++i)
        for (int c = 0; c < R; ++c) m(i, c) = z(rng);
    return m;
}

PartitionVector equal_blocks(int R, int G) {
    std::vector<int> sizes(static_cast<std::size_t>(G), R / G);
    sizes.back() += R % G;
    return PartitionVector(sizes);
}

std::vector<UbProduct> partials(int G) {
    std::mt19937_64 rng(7);
    const PartitionVector p = equal_blocks(G * 20, G);
    const GammaVector g = reference::random_gamma(rng, p, 0.5);
    const UniformBlockMatrix sigma = gamma_to_sigma(g);
    std::vector<UbProduct> out;
    for (int j = 0; j < p.n_params(); ++j) out.push_back(ub_mul(omega_partials(g, j).as_ub(p), sigma.general()));
    return out;
}

void BM_BlockSummariesSerial(benchmark::State& st) {
    const int R = static_cast<int>(st.range(0));
    const PartitionVector p = equal_blocks(R, 4);
    const Eigen::MatrixXd e = noise(500, R, 1);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::block_summaries_serial(e, p));
}

void BM_BlockSummariesParallel(benchmark::State& st) {
    const int R = static_cast<int>(st.range(0));
    set_num_threads(static_cast<int>(st.range(1)));
    const PartitionVector p = equal_blocks(R, 4);
    const Eigen::MatrixXd e = noise(500, R, 1);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::block_summaries_parallel(e, p));
    set_num_threads(0);
}

void BM_FisherSerial(benchmark::State& st) {
    const std::vector<UbProduct> w = partials(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(kernels::fisher_matrix_serial(w, 250.0));
}

void BM_FisherParallel(benchmark::State& st) {
    const std::vector<UbProduct> w = partials(static_cast<int>(st.range(0)));
    set_num_threads(static_cast<int>(st.range(1)));
    for (auto _ : st) benchmark::DoNotOptimize(kernels::fisher_matrix_parallel(w, 250.0));
    set_num_threads(0);
}

void BM_UbApplySerial(benchmark::State& st) {
    const int R = static_cast<int>(st.range(0));
    std::mt19937_64 rng(3);
    const UniformBlockMatrix m = reference::random_ub(rng, equal_blocks(R, 4));
    const Eigen::MatrixXd e = noise(500, R, 2);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::ub_apply_rows_serial(m, e));
}

void BM_UbApplyParallel(benchmark::State& st) {
    const int R = static_cast<int>(st.range(0));
    set_num_threads(static_cast<int>(st.range(1)));
    std::mt19937_64 rng(3);
    const UniformBlockMatrix m = reference::random_ub(rng, equal_blocks(R, 4));
    const Eigen::MatrixXd e = noise(500, R, 2);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::ub_apply_rows_parallel(m, e));
    set_num_threads(0);
}

void BM_OlsSerial(benchmark::State& st) {
    const int R = static_cast<int>(st.range(0));
    const Eigen::MatrixXd x = noise(500, 3, 4);
    const Eigen::MatrixXd y = noise(500, R, 5);
    const kernels::XtxFactor f(x.transpose() * x);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::ols_serial(x, y, f));
}

void BM_OlsParallel(benchmark::State& st) {
    const int R = static_cast<int>(st.range(0));
    set_num_threads(static_cast<int>(st.range(1)));
    const Eigen::MatrixXd x = noise(500, 3, 4);
    const Eigen::MatrixXd y = noise(500, R, 5);
    const kernels::XtxFactor f(x.transpose() * x);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::ols_parallel(x, y, f));
    set_num_threads(0);
}

ScenarioConfig study_config() {
    ScenarioConfig c;
    c.n = 100;
    c.part = PartitionVector({20, 20, 20});
    Eigen::VectorXd v(6);
    v << 0.3, 0.02, -0.05, 0.2, -0.1, -0.4;
    c.true_gamma = GammaVector(v, c.part);
    c.replicates = 16;
    return c;
}

void BM_StudySerial(benchmark::State& st) {
    const ScenarioConfig c = study_config();
    for (auto _ : st) benchmark::DoNotOptimize(run_study_serial(c));
}

void BM_StudyParallel(benchmark::State& st) {
    const ScenarioConfig c = study_config();
    for (auto _ : st) benchmark::DoNotOptimize(run_study(c, static_cast<int>(st.range(0))));
}

} // namespace

BENCHMARK(BM_BlockSummariesSerial)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlockSummariesParallel)->ArgsProduct({{2000, 8000}, {1, 2, 4}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FisherSerial)->Arg(4)->Arg(10)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FisherParallel)->ArgsProduct({{4, 10}, {1, 2, 4}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_UbApplySerial)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_UbApplyParallel)->ArgsProduct({{2000}, {1, 2, 4}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OlsSerial)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OlsParallel)->ArgsProduct({{2000}, {1, 2, 4}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StudySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StudyParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
