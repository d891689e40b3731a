#pragma once

#include <vector>

#include "cirld/model.hpp"

namespace cirld {

struct LegendreEval {
    double value = 0.0;   // L(x,v); +infinity when the velocity is unreachable
    double p_star = 0.0;  // maximizing momentum
    bool converged = false;
    bool unreachable = false;
};

/// Legendre dual L(x,v) = sup_p { p v - H(x,p) }. H is smooth and strongly
/// convex in p for x > 0, so the stationarity condition dH/dp = v is solved
/// by Newton safeguarded with bisection inside an expanding bracket. A hint
/// warm-starts the bracket (the path optimizer re-solves nearby problems).
/// Velocities that fail to bracket before |p| > 1e6 are reported as
/// unreachable with value +infinity rather than as an error.
LegendreEval legendre(const ModelSpec& spec, double x, double v);
LegendreEval legendre(const ModelSpec& spec, double x, double v, double p_hint);

/// sup_v { p v - L(x,v) } by golden-section search on an adaptive bracket;
/// equals H(x,p) up to the stated 1e-6 duality tolerance.
double duality_roundtrip(const ModelSpec& spec, double x, double p);

struct LagrangianGridRow {
    double x, v, L, p_star;
};

std::vector<LagrangianGridRow> lagrangian_grid(const ModelSpec& spec,
                                               const std::vector<double>& xs,
                                               const std::vector<double>& vs);

}  // namespace cirld
