#pragma once

#include <string>
#include <vector>

#include "cirld/linalg.hpp"

namespace cirld {

/// Parametric family of state-dependent rate matrices
///   q_ij(x) = base_ij + slope_ij * x/(1+x)   (i != j),
///   q_ii(x) = -sum_{j!=i} q_ij(x).
/// The bounded feature x/(1+x) keeps every q_ij Lipschitz with constant
/// |slope_ij| and nonnegative whenever base_ij >= 0 and base_ij + slope_ij >= 0.
/// This family is the extension point for other functional forms of q.
struct RateMatrixField {
    SquareMat base;
    SquareMat slope;

    int size() const { return base.n; }

    // q_ij(x) for i != j.
    double rate(int i, int j, double x) const {
        const double s = x / (1.0 + x);
        return base(i, j) + slope(i, j) * s;
    }

    // Fills m with the full generator at x; rows sum to zero exactly
    // (diagonal is the negated running sum of the off-diagonals).
    void eval(double x, SquareMat& m) const;

    // sup_x max_i q_i(x). Linear in the feature s = x/(1+x) in (0,1), so the
    // supremum is attained at s -> 0 or s -> 1 and is available in closed form.
    double max_total_rate() const;
};

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const { return errors.empty(); }
};

/// All static problem data: CIR coefficients, regime means, and the
/// state-dependent switching-rate field.
struct ModelSpec {
    double eta = 1.0;    // mean-reversion rate
    double theta = 1.0;  // volatility coefficient
    std::vector<double> mu;
    RateMatrixField q_field;
    double x_min = 1e-6;
    bool allow_nonfeller = false;

    int n_regimes() const { return static_cast<int>(mu.size()); }
};

/// Checks every model invariant and returns a report instead of throwing.
/// 2*eta*mu[i] >= theta^2 is a hard error unless allow_nonfeller is set, in
/// which case it (and a zero mean) degrades to a warning. Irreducibility of
/// the support graph is probed at 16 log-spaced values of x.
ValidationReport validate(const ModelSpec& spec);

/// Generator q(x); requires x >= spec.x_min.
SquareMat rate_matrix(const ModelSpec& spec, double x);

/// Per-regime drift eta*(mu(i) - x); requires x >= spec.x_min.
std::vector<double> drift_vector(const ModelSpec& spec, double x);

void check_domain(const ModelSpec& spec, double x);

}  // namespace cirld
