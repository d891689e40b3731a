#include "cirld/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cirld/rng.hpp"

namespace cirld {

int substeps_for(const ModelSpec& spec, long long n, double dt, const SimOptions& opts) {
    const double qbar = spec.q_field.max_total_rate();
    double r = 1.0;
    if (qbar > 0.0) r = std::max(r, static_cast<double>(n) * qbar * dt / opts.rate_budget);
    r = std::max(r, dt / opts.h_cap);
    return static_cast<int>(std::ceil(r - 1e-12));
}

namespace detail {

void advance(const ModelSpec& spec, long long n, double h, int n_sub, double& x, int& regime,
             CounterRng& rng, StepperStats& stats) {
    const int N = spec.n_regimes();
    const double sqrt_h = std::sqrt(h);
    const double noise_scale = spec.theta / std::sqrt(static_cast<double>(n));
    for (int s = 0; s < n_sub; ++s) {
        const double z = rng.normal();
        const double u = rng.uniform();
        const double x_old = x;

        double xn = x_old + spec.eta * (spec.mu[regime] - x_old) * h +
                    noise_scale * std::sqrt(std::max(x_old, 0.0)) * sqrt_h * z;
        if (xn < 0.0) {
            xn = 0.0;
            ++stats.clamped;
        }

        // First-order thinning: consecutive intervals of mass n*q_ij(x_old)*h
        // decide the jump target; at most one jump per substep.
        if (N > 1) {
            double acc = 0.0;
            for (int j = 0; j < N; ++j) {
                if (j == regime) continue;
                acc += static_cast<double>(n) * spec.q_field.rate(regime, j, x_old) * h;
                if (u < acc) {
                    regime = j;
                    break;
                }
            }
        }
        x = xn;
        ++stats.steps;
    }
}

}  // namespace detail

namespace {

void check_sim_inputs(const ModelSpec& spec, long long n, double T, double dt, double x0, int k0) {
    const auto rep = validate(spec);
    if (!rep.ok()) throw std::invalid_argument("invalid model spec: " + rep.errors.front());
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("T and dt must be positive");
    if (!(x0 > 0.0)) throw std::invalid_argument("x0 must be positive");
    if (k0 < 1 || k0 > spec.n_regimes()) throw std::invalid_argument("k0 outside the regime set");
}

Trajectory run_one_path(const ModelSpec& spec, long long n, double T, double dt, double x0,
                        int k0, std::uint64_t seed, std::uint64_t stream,
                        const SimOptions& opts) {
    const int K = static_cast<int>(std::ceil(T / dt - 1e-9));
    const double dt_out = T / K;
    const int n_sub = substeps_for(spec, n, dt_out, opts);
    const double h = dt_out / n_sub;

    Trajectory traj;
    traj.n_regimes = spec.n_regimes();
    traj.n = n;
    traj.seed = seed;
    traj.dt = dt_out;
    traj.dt_effective = h;
    traj.times.resize(K + 1);
    traj.x.resize(K + 1);
    traj.regime.resize(K + 1);

    CounterRng rng(seed, stream);
    detail::StepperStats stats;
    double x = x0;
    int regime = k0 - 1;
    traj.times[0] = 0.0;
    traj.x[0] = x0;
    traj.regime[0] = k0;
    for (int k = 1; k <= K; ++k) {
        detail::advance(spec, n, h, n_sub, x, regime, rng, stats);
        traj.times[k] = k * dt_out;
        traj.x[k] = x;
        traj.regime[k] = regime + 1;
    }
    traj.clamped_fraction =
        stats.steps > 0 ? static_cast<double>(stats.clamped) / static_cast<double>(stats.steps)
                        : 0.0;
    return traj;
}

}  // namespace

Trajectory simulate_path(const ModelSpec& spec, long long n, double T, double dt, double x0,
                         int k0, std::uint64_t seed, const SimOptions& opts) {
    check_sim_inputs(spec, n, T, dt, x0, k0);
    return run_one_path(spec, n, T, dt, x0, k0, seed, /*stream=*/0, opts);
}

OccupationMeasure occupation(const Trajectory& traj, double t, double window) {
    if (traj.times.size() < 2) throw std::invalid_argument("trajectory too short");
    const double t_end = traj.times.back();
    if (!(window > 0.0) || t < -1e-12 || t + window > t_end + 1e-12)
        throw std::invalid_argument("occupation window outside trajectory");

    int n_regimes = traj.n_regimes;
    for (int r : traj.regime) n_regimes = std::max(n_regimes, r);
    std::vector<double> mass(n_regimes, 0.0);

    // Labels are right-continuous: regime[k] holds on [t_k, t_{k+1}).
    for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
        const double a = std::max(traj.times[k], t);
        const double b = std::min(traj.times[k + 1], t + window);
        if (b > a) mass[traj.regime[k] - 1] += b - a;
    }
    OccupationMeasure occ;
    occ.weights.probs.resize(n_regimes);
    for (int i = 0; i < n_regimes; ++i) occ.weights.probs[i] = mass[i] / window;
    return occ;
}

namespace {

constexpr int kPathBlock = 16;  // fixed reduction granularity, not tied to thread count

struct BlockAccum {
    std::vector<double> sum;
    std::vector<double> sumsq;
    double clamp_sum = 0.0;
};

EnsembleSummary assemble(const ModelSpec& spec, long long n, double T, double dt, double x0,
                         int k0, int n_paths, std::uint64_t seed, bool keep_paths,
                         const SimOptions& opts, bool parallel) {
    check_sim_inputs(spec, n, T, dt, x0, k0);
    if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");

    const int K = static_cast<int>(std::ceil(T / dt - 1e-9));
    const int n_blocks = (n_paths + kPathBlock - 1) / kPathBlock;
    std::vector<BlockAccum> blocks(n_blocks);

    EnsembleSummary out;
    out.n_paths = n_paths;
    if (keep_paths) out.paths.resize(n_paths);

    std::vector<Trajectory> first_of_block(keep_paths ? 0 : 1);

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int b = 0; b < n_blocks; ++b) {
        BlockAccum& acc = blocks[b];
        acc.sum.assign(K + 1, 0.0);
        acc.sumsq.assign(K + 1, 0.0);
        const int lo = b * kPathBlock;
        const int hi = std::min(n_paths, lo + kPathBlock);
        for (int p = lo; p < hi; ++p) {
            Trajectory traj = run_one_path(spec, n, T, dt, x0, k0, seed,
                                           static_cast<std::uint64_t>(p), opts);
            for (int k = 0; k <= K; ++k) {
                acc.sum[k] += traj.x[k];
                acc.sumsq[k] += traj.x[k] * traj.x[k];
            }
            acc.clamp_sum += traj.clamped_fraction;
            if (keep_paths)
                out.paths[p] = std::move(traj);
            else if (b == 0 && p == 0)
                first_of_block[0] = std::move(traj);
        }
    }

    const Trajectory& ref = keep_paths ? out.paths[0] : first_of_block[0];
    out.times = ref.times;
    out.mean_x.assign(K + 1, 0.0);
    out.var_x.assign(K + 1, 0.0);
    double clamp = 0.0;
    // Merge in block order; each block was accumulated in path order, so the
    // result is independent of scheduling.
    for (int b = 0; b < n_blocks; ++b) {
        for (int k = 0; k <= K; ++k) {
            out.mean_x[k] += blocks[b].sum[k];
            out.var_x[k] += blocks[b].sumsq[k];
        }
        clamp += blocks[b].clamp_sum;
    }
    const double P = static_cast<double>(n_paths);
    for (int k = 0; k <= K; ++k) {
        const double mean = out.mean_x[k] / P;
        out.mean_x[k] = mean;
        out.var_x[k] = n_paths > 1 ? std::max(0.0, (out.var_x[k] - P * mean * mean) / (P - 1.0))
                                   : 0.0;
    }
    out.clamped_fraction = clamp / P;
    return out;
}

}  // namespace

EnsembleSummary mc_ensemble(const ModelSpec& spec, long long n, double T, double dt, double x0,
                            int k0, int n_paths, std::uint64_t seed, bool keep_paths,
                            const SimOptions& opts) {
    return assemble(spec, n, T, dt, x0, k0, n_paths, seed, keep_paths, opts, true);
}

EnsembleSummary mc_ensemble_serial(const ModelSpec& spec, long long n, double T, double dt,
                                   double x0, int k0, int n_paths, std::uint64_t seed,
                                   bool keep_paths, const SimOptions& opts) {
    return assemble(spec, n, T, dt, x0, k0, n_paths, seed, keep_paths, opts, false);
}

}  // namespace cirld
