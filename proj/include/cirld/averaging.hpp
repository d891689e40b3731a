#pragma once

#include <vector>

#include "cirld/model.hpp"
#include "cirld/simulate.hpp"

namespace cirld {

struct AveragedFlow {
    std::vector<double> times;
    std::vector<double> xbar;
    double dt_effective = 0.0;
};

/// Stationary law of the frozen chain q(x): solves pi q(x) = 0 with the
/// normalization sum(pi) = 1 replacing the redundant last equation, plus one
/// round of iterative refinement.
SimplexMeasure stationary(const ModelSpec& spec, double x);

/// Drift of the averaged limit dynamics: eta*(sum_i mu(i) pi^x_i - x).
double averaged_drift(const ModelSpec& spec, double x);

/// Classical RK4 for xbar' = averaged_drift(xbar) on a uniform output grid.
/// When refine is set the integrator substeps until the step-halving error
/// estimate drops below 1e-8 per unit time.
AveragedFlow limit_ode(const ModelSpec& spec, double x0, double T, double dt, bool refine = true);

}  // namespace cirld
