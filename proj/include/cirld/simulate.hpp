#pragma once

#include <cstdint>
#include <vector>

#include "cirld/model.hpp"

namespace cirld {

struct SimOptions {
    // Per-substep switching mass n*q_i*h is kept at or below this bound; the
    // step is refined until it holds.
    double rate_budget = 0.1;
    // Hard cap on the integration substep, so models with little or no
    // switching still resolve the drift.
    double h_cap = 1e-3;
};

/// One simulated slow-fast path on a uniform output grid. The integrator may
/// substep below dt for stability; dt_effective records the substep actually
/// used. Regime labels are 1-based to match the model's regime set.
struct Trajectory {
    std::vector<double> times;
    std::vector<double> x;
    std::vector<int> regime;
    int n_regimes = 0;
    long long n = 0;
    std::uint64_t seed = 0;
    double dt = 0.0;            // output grid step
    double dt_effective = 0.0;  // integration substep
    double clamped_fraction = 0.0;
};

struct SimplexMeasure {
    std::vector<double> probs;
};

struct OccupationMeasure {
    SimplexMeasure weights;
};

struct EnsembleSummary {
    std::vector<double> times;
    std::vector<double> mean_x;
    std::vector<double> var_x;
    int n_paths = 0;
    double clamped_fraction = 0.0;  // averaged over paths
    std::vector<Trajectory> paths;  // only when keep_paths was requested
};

/// Full-truncation Euler for the slow component coupled with first-order
/// thinning for the regime jumps (at most one jump per substep). Identical
/// inputs give a bit-identical trajectory.
Trajectory simulate_path(const ModelSpec& spec, long long n, double T, double dt, double x0,
                         int k0, std::uint64_t seed, const SimOptions& opts = {});

/// Fraction of time spent in each regime over [t, t+window].
OccupationMeasure occupation(const Trajectory& traj, double t, double window);

/// Path p draws from the stream keyed by (seed, p); partial sums are merged
/// in fixed blocks of paths, so the summary is byte-identical for any number
/// of workers. `mc_ensemble_serial` is the plain-loop reference.
EnsembleSummary mc_ensemble(const ModelSpec& spec, long long n, double T, double dt, double x0,
                            int k0, int n_paths, std::uint64_t seed, bool keep_paths = false,
                            const SimOptions& opts = {});
EnsembleSummary mc_ensemble_serial(const ModelSpec& spec, long long n, double T, double dt,
                                   double x0, int k0, int n_paths, std::uint64_t seed,
                                   bool keep_paths = false, const SimOptions& opts = {});

/// Substep refinement shared by every simulation entry point: splits dt into
/// the smallest number of equal pieces meeting the rate budget and h_cap.
int substeps_for(const ModelSpec& spec, long long n, double dt, const SimOptions& opts);

class CounterRng;

namespace detail {

struct StepperStats {
    long long clamped = 0;
    long long steps = 0;
};

// Advances (x, regime) through n_sub substeps of size h, consuming exactly
// three uniforms per substep. regime is 0-based here.
void advance(const ModelSpec& spec, long long n, double h, int n_sub, double& x, int& regime,
             CounterRng& rng, StepperStats& stats);

}  // namespace detail

}  // namespace cirld
