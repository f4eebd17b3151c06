// Serial reference vs OpenMP kernels. Run with --benchmark_filter to pick
// one; Arg is the particle count.
#include "pbf/kernels.hpp"
#include "pbf/rng.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

namespace {

using namespace pbf;

Matrix random_states(Eigen::Index dim, Eigen::Index n, RngStream& rng) {
    Matrix m(dim, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < dim; ++i) m(i, j) = rng.normal();
    return m;
}

std::vector<double> random_log_w(std::size_t n, RngStream& rng) {
    std::vector<double> w(n);
    for (auto& v : w) v = std::log(rng.uniform(1e-3, 1.0));
    return w;
}

std::vector<kernels::SensorScan> five_sensors() {
    std::vector<kernels::SensorScan> out;
    for (int i = 0; i < 5; ++i) {
        kernels::SensorScan s;
        s.h = [i](const Eigen::Ref<const Vector>& x) { return x[1] * (1.0 + 0.1 * i) - x[3]; };
        s.sigma = 0.5;
        s.log_miss = std::log(0.4);
        s.log_d1 = 0.0;
        s.z = {0.1 * i, -0.3, 1.2};
        s.log_b = {std::log(2.0), std::log(2.0), std::log(2.0)};
        out.push_back(std::move(s));
    }
    return out;
}

template <bool Parallel>
void BM_max_log_gauss(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    RngStream rng(1);
    const Matrix targets = random_states(4, n, rng);
    const Matrix sources = random_states(4, n, rng);
    const auto log_w = random_log_w(static_cast<std::size_t>(n), rng);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto _ : state) {
        if constexpr (Parallel) {
            kernels::max_log_gauss(targets, sources, log_w, out);
        } else {
            kernels::serial::max_log_gauss(targets, sources, log_w, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * n * n);
}

template <bool Parallel>
void BM_scan_terms(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    RngStream rng(2);
    const Matrix states = random_states(4, n, rng);
    const auto log_w = random_log_w(static_cast<std::size_t>(n), rng);
    const auto sensors = five_sensors();
    for (auto _ : state) {
        kernels::ScanTerms t;
        if constexpr (Parallel) {
            t = kernels::scan_terms(states, log_w, sensors);
        } else {
            t = kernels::serial::scan_terms(states, log_w, sensors);
        }
        benchmark::DoNotOptimize(t.log_factor.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(BM_max_log_gauss<false>)->Name("max_log_gauss/serial")->Arg(500)->Arg(2000);
BENCHMARK(BM_max_log_gauss<true>)->Name("max_log_gauss/omp")->Arg(500)->Arg(2000);
BENCHMARK(BM_scan_terms<false>)->Name("scan_terms/serial")->Arg(2000)->Arg(10000);
BENCHMARK(BM_scan_terms<true>)->Name("scan_terms/omp")->Arg(2000)->Arg(10000);

BENCHMARK_MAIN();
