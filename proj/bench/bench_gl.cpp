#include <vector>

#include <benchmark/benchmark.h>

#include "fph/fracalc.hpp"

namespace {

struct Fixture {
    std::vector<double> w, rows, out;
    std::size_t len, dim;

    Fixture(std::size_t len_, std::size_t dim_) : len(len_), dim(dim_) {
        w = fph::gl_coefficients(0.75, len);
        rows.resize(len * dim);
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = 1e-3 * static_cast<double>(i % 977);
        out.resize(dim);
    }
    const double* latest() const { return rows.data() + (len - 1) * dim; }
};

template <void (*Sum)(const double*, const double*, std::size_t, std::size_t, double*)>
void BM_gl_sum(benchmark::State& state) {
    Fixture f(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) {
        Sum(f.w.data(), f.latest(), f.len, f.dim, f.out.data());
        benchmark::DoNotOptimize(f.out.data());
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void BM_push(benchmark::State& state) {
    fph::FracOp op(0.75, 1e-3, 5, static_cast<std::size_t>(state.range(0)));
    op.set_kernel(state.range(1) ? fph::Kernel::Parallel : fph::Kernel::Serial);
    fph::Vec x = fph::Vec::Ones(5);
    // fill the window so every push runs the full convolution
    for (long k = 0; k < state.range(0); ++k) op.push(x);
    for (auto _ : state) {
        x[0] += 1e-6;
        benchmark::DoNotOptimize(op.push(x));
    }
}

void window_by_dim(benchmark::internal::Benchmark* b) {
    for (long len : {1000, 10000, 100000})
        for (long dim : {2, 5}) b->Args({len, dim});
}

}  // namespace

BENCHMARK(BM_gl_sum<fph::gl_sum_serial>)->Name("gl_sum/serial")->Apply(window_by_dim);
BENCHMARK(BM_gl_sum<fph::gl_sum_omp>)->Name("gl_sum/omp")->Apply(window_by_dim);
BENCHMARK(BM_push)->ArgsProduct({{1000, 10000}, {0, 1}})->ArgNames({"window", "omp"});

BENCHMARK_MAIN();
