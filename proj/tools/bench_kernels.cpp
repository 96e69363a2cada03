// Kernel benchmark: OpenMP-parallel kernels against their serial references.
// Results must match bitwise; timings show the parallel speedup.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "zsl/kernels.hpp"
#include "zsl/matrix.hpp"

using namespace zsl;
using Clock = std::chrono::steady_clock;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix m(rows, cols);
    for (std::size_t t = 0; t < m.size(); ++t) m.data()[t] = dist(rng);
    return m;
}

template <typename F>
double time_ms(F&& fn, int reps) {
    // warmup
    fn();
    const auto start = Clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto stop = Clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
    std::printf("%-28s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx   %s\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms,
                equal ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 3;
    std::mt19937_64 rng(7);

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif

    {
        const Matrix a = random_matrix(384, 384, rng);
        const Matrix b = random_matrix(384, 384, rng);
        Matrix rs, rp;
        const double ts = time_ms([&] { rs = ref::matmul(a, b); }, reps);
        const double tp = time_ms([&] { rp = matmul(a, b); }, reps);
        report("matmul 384x384x384", ts, tp, rs == rp);
    }
    {
        const Matrix a = random_matrix(2048, 128, rng);
        const Matrix b = random_matrix(2048, 128, rng);
        Matrix rs, rp;
        const double ts = time_ms([&] { rs = ref::matmul_ta(a, b); }, reps);
        const double tp = time_ms([&] { rp = matmul_ta(a, b); }, reps);
        report("matmul_ta 128x2048x128", ts, tp, rs == rp);
    }
    {
        const Matrix a = random_matrix(1024, 256, rng);
        const Matrix b = random_matrix(512, 256, rng);
        Matrix rs, rp;
        const double ts = time_ms([&] { rs = ref::matmul_tb(a, b); }, reps);
        const double tp = time_ms([&] { rp = matmul_tb(a, b); }, reps);
        report("matmul_tb 1024x256x512", ts, tp, rs == rp);
    }
    {
        const Matrix x = random_matrix(1500, 64, rng);
        Matrix rs, rp;
        const double ts = time_ms([&] { rs = ref::pairwise_distances(x); }, reps);
        const double tp = time_ms([&] { rp = pairwise_distances(x); }, reps);
        report("pairwise 1500x64", ts, tp, rs == rp);
    }
    {
        const Matrix q = random_matrix(4096, 85, rng);
        const Matrix p = random_matrix(50, 85, rng);
        std::vector<std::vector<std::size_t>> rs, rp;
        const double ts = time_ms([&] { rs = ref::rank_by_cosine(q, p, 5); }, reps);
        const double tp = time_ms([&] { rp = rank_by_cosine(q, p, 5); }, reps);
        report("rank_by_cosine 4096x50", ts, tp, rs == rp);
    }
    return 0;
}
