#pragma once

#include <vector>

#include "cirld/model.hpp"
#include "cirld/simulate.hpp"

namespace cirld {

/// H(x,p) together with the Perron pair of the tilted generator.
/// right_eigvec is normalized to max-component 1, left_eigvec so that
/// left . right = 1; both are strictly positive.
struct HamiltonianEval {
    double value = 0.0;
    std::vector<double> right_eigvec;
    std::vector<double> left_eigvec;
    int iterations = 0;
    double residual = 0.0;
};

struct HamiltonianGradient {
    double dHdx = 0.0;
    double dHdp = 0.0;
};

/// Per-regime Hamiltonian of the frozen slow diffusion:
///   eta*(mu(i) - x)*p + theta^2*x*p^2/2.
std::vector<double> regime_hamiltonian(const ModelSpec& spec, double x, double p);

/// Tilted generator: q(x) with the per-regime Hamiltonian added on the
/// diagonal. Off-diagonals stay nonnegative; at p = 0 the rows sum to zero
/// exactly.
SquareMat build_q_tilted(const ModelSpec& spec, double x, double p);

/// Principal eigenvalue of build_q_tilted via power iteration on M + cI with
/// shift c = max_i |M_ii| + 1 (the shifted matrix is nonnegative, irreducible
/// and has positive diagonal, so the Perron root is strictly dominant). The
/// eigenvalue is refined with the two-sided Rayleigh quotient once both
/// eigenvectors have converged.
HamiltonianEval hamiltonian(const ModelSpec& spec, double x, double p);

/// First-order eigenvalue perturbation: dH = left . (dM) . right with
/// left . right = 1; the entries of dM/dp and dM/dx are analytic.
HamiltonianGradient hamiltonian_gradient(const ModelSpec& spec, double x, double p);
HamiltonianGradient hamiltonian_gradient(const ModelSpec& spec, double x, double p,
                                         const HamiltonianEval& eig);

/// Occupation-measure cost of the frozen chain at x:
///   I(x,pi) = -inf_{g>0} sum_i pi_i (R_x g)_i / g_i.
/// Substituting g = e^phi makes the objective a convex sum of exponentials;
/// it is minimized by damped Newton under the gauge phi_1 = 0. Returns 0 at
/// the stationary law of q(x) and is strictly positive elsewhere.
double dv_functional(const ModelSpec& spec, double x, const SimplexMeasure& pi);

/// Test oracle: sup over the probability simplex of
///   sum_i B_i pi_i - I(x,pi)
/// by scanning a uniform barycentric grid (coordinates k/m) and then zooming
/// the scan into the best cell. Exponential in the regime count; N <= 4 only.
double variational_hamiltonian_oracle(const ModelSpec& spec, double x, double p,
                                      int grid_resolution);

/// sup over a log-spaced x grid and all regimes of the per-regime Hamiltonian
/// evaluated at the gradient of the confining potential
///   -log(x) + log(1 + x^2/2) - log(sqrt(2)).
/// Finite whenever 2*eta*mu(i) >= theta^2.
double containment_constant(const ModelSpec& spec, double x_lo = 1e-6, double x_hi = 1e4,
                            int n_points = 400);

struct HamiltonianGridRow {
    double x, p, H, dHdx, dHdp;
    int iters;
    double residual;
};

/// Evaluates H and its gradient on the tensor grid xs x ps, rows in row-major
/// order. The OpenMP version writes disjoint rows, so it matches the serial
/// reference bit for bit.
std::vector<HamiltonianGridRow> hamiltonian_grid(const ModelSpec& spec,
                                                 const std::vector<double>& xs,
                                                 const std::vector<double>& ps);
std::vector<HamiltonianGridRow> hamiltonian_grid_serial(const ModelSpec& spec,
                                                        const std::vector<double>& xs,
                                                        const std::vector<double>& ps);

}  // namespace cirld
