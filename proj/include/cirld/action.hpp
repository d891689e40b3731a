#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "cirld/model.hpp"

namespace cirld {

/// Piecewise-linear candidate path on a uniform grid over [0, T].
struct PathDiscretization {
    double T = 0.0;
    std::vector<double> nodes;  // K+1 values

    int segments() const { return static_cast<int>(nodes.size()) - 1; }
    double dt() const { return T / segments(); }
    std::vector<double> times() const;
};

struct ActionResult {
    double action = 0.0;  // +infinity when a segment velocity is unreachable
    std::vector<double> per_segment;
    bool converged = true;
    int iterations = 0;
};

struct MinimizeOptions {
    int max_iters = 10000;
    double grad_tol = 1e-6;
    double fd_step = 1e-6;
};

/// Midpoint-quadrature action: sum_k dt * L((g_k+g_{k+1})/2, (g_{k+1}-g_k)/dt).
ActionResult action(const ModelSpec& spec, const PathDiscretization& path);

/// Fixed-endpoint minimum-action path over the interior nodes: L-BFGS descent
/// on central-difference gradients, nodes projected to x >= x_min. The
/// initial path is the linear interpolation unless one is supplied; descent
/// never accepts an increase, so the result cannot exceed the initial action.
std::pair<PathDiscretization, ActionResult> minimize_action(
    const ModelSpec& spec, double x_start, double x_end, double T, int K,
    const std::optional<std::vector<double>>& init = std::nullopt,
    const MinimizeOptions& opts = {});

/// Variational semigroup value sup_gamma { f(gamma(T)) - action } over paths
/// from x0 with a free endpoint (same optimizer, endpoint unconstrained).
double nisio_value(const ModelSpec& spec, const std::function<double(double)>& f, double x0,
                   double T, int K, PathDiscretization* path_out = nullptr,
                   ActionResult* result_out = nullptr, const MinimizeOptions& opts = {});

}  // namespace cirld
