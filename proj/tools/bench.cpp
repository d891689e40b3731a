// Compares the OpenMP kernels against their serial reference implementations
// on the two hot paths: ensemble simulation and Hamiltonian grids. Also
// asserts that both produce identical bits, since the parallel kernels are
// required to be scheduling-independent.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cirld/config.hpp"
#include "cirld/simulate.hpp"
#include "cirld/spectral.hpp"

using namespace cirld;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds(clock_type::time_point a, clock_type::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) v[i] = lo + (hi - lo) * i / (count - 1);
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: bench <config> [n_paths] [grid]\n");
        return 1;
    }
    const ModelSpec spec = load_config(argv[1]);
    const int n_paths = argc > 2 ? std::atoi(argv[2]) : 2000;
    const int grid = argc > 3 ? std::atoi(argv[3]) : 40;

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif

    {
        auto t0 = clock_type::now();
        const EnsembleSummary ser = mc_ensemble_serial(spec, 1000, 1.0, 0.01, 1.0, 1, n_paths, 7);
        auto t1 = clock_type::now();
        const EnsembleSummary par = mc_ensemble(spec, 1000, 1.0, 0.01, 1.0, 1, n_paths, 7);
        auto t2 = clock_type::now();
        const bool same = ser.mean_x == par.mean_x && ser.var_x == par.var_x;
        const double ts = seconds(t0, t1), tp = seconds(t1, t2);
        std::printf("ensemble   %6d paths   serial %8.3fs   omp %8.3fs   speedup %5.2fx   %s\n",
                    n_paths, ts, tp, ts / tp, same ? "bit-identical" : "MISMATCH");
        if (!same) return 1;
    }
    {
        const auto xs = linspace(0.2, 5.0, grid);
        const auto ps = linspace(-3.0, 3.0, grid);
        auto t0 = clock_type::now();
        const auto ser = hamiltonian_grid_serial(spec, xs, ps);
        auto t1 = clock_type::now();
        const auto par = hamiltonian_grid(spec, xs, ps);
        auto t2 = clock_type::now();
        bool same = ser.size() == par.size();
        for (std::size_t i = 0; same && i < ser.size(); ++i)
            same = ser[i].H == par[i].H && ser[i].dHdx == par[i].dHdx &&
                   ser[i].dHdp == par[i].dHdp;
        const double ts = seconds(t0, t1), tp = seconds(t1, t2);
        std::printf("H grid     %4dx%-4d       serial %8.3fs   omp %8.3fs   speedup %5.2fx   %s\n",
                    grid, grid, ts, tp, ts / tp, same ? "bit-identical" : "MISMATCH");
        if (!same) return 1;
    }
    return 0;
}
