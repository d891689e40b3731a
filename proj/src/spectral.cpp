#include "cirld/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cirld/errors.hpp"

namespace cirld {

std::vector<double> regime_hamiltonian(const ModelSpec& spec, double x, double p) {
    std::vector<double> b(spec.n_regimes());
    const double quad = 0.5 * spec.theta * spec.theta * x * p * p;
    for (int i = 0; i < spec.n_regimes(); ++i) b[i] = spec.eta * (spec.mu[i] - x) * p + quad;
    return b;
}

SquareMat build_q_tilted(const ModelSpec& spec, double x, double p) {
    check_domain(spec, x);
    const int n = spec.n_regimes();
    SquareMat m(n);
    spec.q_field.eval(x, m);
    const auto b = regime_hamiltonian(spec, x, p);
    for (int i = 0; i < n; ++i) m(i, i) += b[i];
    return m;
}

namespace {

constexpr int kMaxPowerIters = 100000;

// Power iteration on the nonnegative matrix A (optionally its transpose).
// Normalizes to max-component 1 and stops once the eigen residual is a small
// multiple of machine precision relative to the matrix scale.
int power_iteration(const SquareMat& a, bool transpose, double tol_abs, std::vector<double>& v,
                    double& lambda) {
    const int n = a.n;
    v.assign(n, 1.0);
    std::vector<double> w(n);
    lambda = 0.0;
    for (int it = 1; it <= kMaxPowerIters; ++it) {
        if (transpose)
            mat_tvec(a, v, w);
        else
            mat_vec(a, v, w);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            num += w[i] * v[i];
            den += v[i] * v[i];
        }
        lambda = num / den;
        double resid = 0.0, wmax = 0.0;
        for (int i = 0; i < n; ++i) {
            resid = std::max(resid, std::fabs(w[i] - lambda * v[i]));
            wmax = std::max(wmax, w[i]);
        }
        for (int i = 0; i < n; ++i) v[i] = w[i] / wmax;
        if (resid <= tol_abs) return it;
    }
    throw ConvergenceError("power iteration did not converge");
}

}  // namespace

HamiltonianEval hamiltonian(const ModelSpec& spec, double x, double p) {
    SquareMat m = build_q_tilted(spec, x, p);
    const int n = m.n;
    HamiltonianEval out;
    if (n == 1) {
        out.value = m(0, 0);
        out.right_eigvec = {1.0};
        out.left_eigvec = {1.0};
        return out;
    }

    double shift = 0.0;
    for (int i = 0; i < n; ++i) shift = std::max(shift, std::fabs(m(i, i)));
    shift += 1.0;
    SquareMat a = m;
    for (int i = 0; i < n; ++i) a(i, i) += shift;

    double norm_a = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += std::fabs(a(i, j));
        norm_a = std::max(norm_a, row);
    }
    const double tol_abs = 1e-13 * std::max(1.0, norm_a);

    std::vector<double> right, left;
    double lam_r = 0.0, lam_l = 0.0;
    const int it_r = power_iteration(a, false, tol_abs, right, lam_r);
    const int it_l = power_iteration(a, true, tol_abs, left, lam_l);

    const double rmax = *std::max_element(right.begin(), right.end());
    for (double& v : right) v /= rmax;
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += left[i] * right[i];
    for (double& v : left) v /= dot;

    // Two-sided Rayleigh quotient on the unshifted matrix; with both vectors
    // converged this is accurate to the residual product.
    std::vector<double> mr(n);
    mat_vec(m, right, mr);
    double value = 0.0;
    for (int i = 0; i < n; ++i) value += left[i] * mr[i];

    double resid = 0.0;
    for (int i = 0; i < n; ++i) resid = std::max(resid, std::fabs(mr[i] - value * right[i]));

    out.value = value;
    out.right_eigvec = std::move(right);
    out.left_eigvec = std::move(left);
    out.iterations = it_r + it_l;
    out.residual = resid;
    return out;
}

HamiltonianGradient hamiltonian_gradient(const ModelSpec& spec, double x, double p,
                                         const HamiltonianEval& eig) {
    const int n = spec.n_regimes();
    const auto& phi = eig.right_eigvec;
    const auto& psi = eig.left_eigvec;

    HamiltonianGradient g;
    const double one_px = 1.0 + x;
    const double dfeature = 1.0 / (one_px * one_px);  // d/dx of x/(1+x)
    const double db_dx = -spec.eta * p + 0.5 * spec.theta * spec.theta * p * p;
    for (int i = 0; i < n; ++i) {
        const double db_dp = spec.eta * (spec.mu[i] - x) + spec.theta * spec.theta * x * p;
        g.dHdp += psi[i] * db_dp * phi[i];
        double diag = db_dx;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dq = spec.q_field.slope(i, j) * dfeature;
            g.dHdx += psi[i] * dq * phi[j];
            diag -= dq;
        }
        g.dHdx += psi[i] * diag * phi[i];
    }
    return g;
}

HamiltonianGradient hamiltonian_gradient(const ModelSpec& spec, double x, double p) {
    return hamiltonian_gradient(spec, x, p, hamiltonian(spec, x, p));
}

namespace {

// Objective sum_i pi_i sum_{j != i} q_ij (e^{phi_j - phi_i} - 1) with its
// gradient and Hessian in the free coordinates phi_1..phi_{N-1} (phi_0 = 0).
// The terms largely cancel near the optimum, so abs_scale reports their
// magnitude sum; that is the resolution limit of an objective evaluation.
double dv_objective(const SquareMat& q, const std::vector<double>& pi,
                    const std::vector<double>& phi, std::vector<double>* grad, SquareMat* hess,
                    double* abs_scale = nullptr) {
    const int n = q.n;
    double f = 0.0;
    if (grad) grad->assign(n - 1, 0.0);
    if (hess) {
        *hess = SquareMat(n - 1);
    }
    if (abs_scale) *abs_scale = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double w = pi[i] * q(i, j);
            if (w == 0.0) continue;
            const double d = phi[j] - phi[i];
            if (d > 500.0) return std::numeric_limits<double>::infinity();
            const double e = std::exp(d);
            f += w * (e - 1.0);
            if (abs_scale) *abs_scale += std::fabs(w * (e - 1.0));
            if (grad) {
                if (j > 0) (*grad)[j - 1] += w * e;
                if (i > 0) (*grad)[i - 1] -= w * e;
            }
            if (hess) {
                if (j > 0) (*hess)(j - 1, j - 1) += w * e;
                if (i > 0) (*hess)(i - 1, i - 1) += w * e;
                if (i > 0 && j > 0) {
                    (*hess)(i - 1, j - 1) -= w * e;
                    (*hess)(j - 1, i - 1) -= w * e;
                }
            }
        }
    }
    return f;
}

}  // namespace

double dv_functional(const ModelSpec& spec, double x, const SimplexMeasure& pi) {
    check_domain(spec, x);
    const int n = spec.n_regimes();
    if (static_cast<int>(pi.probs.size()) != n)
        throw std::invalid_argument("dv_functional: measure has wrong dimension");
    double total = 0.0;
    for (double w : pi.probs) {
        if (w < -1e-9) throw std::invalid_argument("dv_functional: negative probability");
        total += w;
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw std::invalid_argument("dv_functional: probabilities do not sum to 1");
    if (n == 1) return 0.0;

    std::vector<double> prob(n);
    for (int i = 0; i < n; ++i) prob[i] = std::max(0.0, pi.probs[i]) / total;

    SquareMat q(n);
    spec.q_field.eval(x, q);

    std::vector<double> phi(n, 0.0), grad, cand(n, 0.0);
    SquareMat hess;
    double fscale = 0.0;
    double f = dv_objective(q, prob, phi, &grad, &hess, &fscale);

    double lm = 0.0;  // Levenberg damping, raised only on failed steps
    const int max_iters = 2000;
    for (int it = 0; it < max_iters; ++it) {
        double gnorm = 0.0;
        for (double g : grad) gnorm = std::max(gnorm, std::fabs(g));
        if (gnorm <= 1e-10) return std::max(0.0, -f);

        std::vector<double> step;
        bool solved = false;
        while (!solved) {
            SquareMat h = hess;
            for (int i = 0; i < n - 1; ++i) h(i, i) += lm;
            std::vector<double> rhs(n - 1);
            for (int i = 0; i < n - 1; ++i) rhs[i] = -grad[i];
            try {
                step = lu_solve(std::move(h), std::move(rhs));
                solved = true;
            } catch (const std::runtime_error&) {
                lm = lm == 0.0 ? 1e-8 : lm * 10.0;
                if (lm > 1e12) throw ConvergenceError("dv_functional: singular Hessian");
            }
        }
        double smax = 0.0;
        for (double s : step) smax = std::max(smax, std::fabs(s));
        if (smax > 8.0)
            for (double& s : step) s *= 8.0 / smax;
        double gd = 0.0;
        for (int i = 0; i < n - 1; ++i) gd += grad[i] * step[i];

        // Armijo backtracking with an epsilon-level slack sized by the term
        // magnitudes: near the machine floor of F the predicted decrease is
        // unmeasurable and the full Newton step must still be taken so the
        // gradient keeps dropping.
        const double slack =
            16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, fscale);
        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (int i = 1; i < n; ++i) cand[i] = phi[i] + alpha * step[i - 1];
            const double fc = dv_objective(q, prob, cand, nullptr, nullptr);
            if (fc <= f + 1e-4 * alpha * gd + slack) {
                phi = cand;
                f = dv_objective(q, prob, phi, &grad, &hess, &fscale);
                accepted = true;
                lm = lm * 0.25;
                if (lm < 1e-14) lm = 0.0;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            lm = lm == 0.0 ? 1e-8 : lm * 10.0;
            if (lm > 1e12) break;
        }
    }
    double gnorm = 0.0;
    for (double g : grad) gnorm = std::max(gnorm, std::fabs(g));
    if (gnorm <= 1e-10) return std::max(0.0, -f);
    throw ConvergenceError("dv_functional: Newton did not reach gradient tolerance");
}

namespace {

// Recursively enumerates barycentric grid points (k_1,...,k_N), sum = m.
template <typename Fn>
void for_each_composition(int n, std::vector<int>& ks, int idx, int left, Fn&& fn) {
    if (idx == n - 1) {
        ks[idx] = left;
        fn(ks);
        return;
    }
    for (int k = 0; k <= left; ++k) {
        ks[idx] = k;
        for_each_composition(n, ks, idx + 1, left - k, fn);
    }
}

}  // namespace

double variational_hamiltonian_oracle(const ModelSpec& spec, double x, double p,
                                      int grid_resolution) {
    const int n = spec.n_regimes();
    if (n > 4) throw std::invalid_argument("variational oracle limited to N <= 4");
    const auto b = regime_hamiltonian(spec, x, p);
    if (n == 1) return b[0];

    SimplexMeasure pi;
    pi.probs.assign(n, 0.0);
    auto objective = [&](const std::vector<double>& probs) {
        pi.probs = probs;
        double lin = 0.0;
        for (int i = 0; i < n; ++i) lin += b[i] * probs[i];
        return lin - dv_functional(spec, x, pi);
    };

    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> best_pi(n, 0.0), probs(n);
    std::vector<int> ks(n);
    const int m = std::max(2, grid_resolution);
    for_each_composition(n, ks, 0, m, [&](const std::vector<int>& comp) {
        for (int i = 0; i < n; ++i) probs[i] = static_cast<double>(comp[i]) / m;
        const double v = objective(probs);
        if (v > best) {
            best = v;
            best_pi = probs;
        }
    });

    // Zoom the scan into the best cell to remove most of the grid bias.
    double width = 1.5 / m;
    const int half = 5;
    for (int level = 0; level < 3; ++level) {
        const std::vector<double> center = best_pi;
        std::vector<int> offs(n - 1, -half);
        while (true) {
            double sum = 0.0;
            bool feasible = true;
            for (int i = 0; i < n - 1; ++i) {
                probs[i] = center[i] + width * offs[i] / half;
                if (probs[i] < 0.0) feasible = false;
                sum += probs[i];
            }
            probs[n - 1] = 1.0 - sum;
            if (probs[n - 1] < 0.0) feasible = false;
            if (feasible) {
                const double v = objective(probs);
                if (v > best) {
                    best = v;
                    best_pi = probs;
                }
            }
            int carry = 0;
            while (carry < n - 1 && ++offs[carry] > half) offs[carry++] = -half;
            if (carry == n - 1) break;
        }
        width /= half;
    }
    return best;
}

double containment_constant(const ModelSpec& spec, double x_lo, double x_hi, int n_points) {
    const double lo = std::log(std::max(x_lo, spec.x_min));
    const double hi = std::log(x_hi);
    double cbound = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_points; ++k) {
        const double x = std::exp(lo + (hi - lo) * k / (n_points - 1));
        const double slope = -1.0 / x + 2.0 * x / (2.0 + x * x);
        const auto b = regime_hamiltonian(spec, x, slope);
        for (double v : b) cbound = std::max(cbound, v);
    }
    return cbound;
}

namespace {

std::vector<HamiltonianGridRow> grid_impl(const ModelSpec& spec, const std::vector<double>& xs,
                                          const std::vector<double>& ps, bool parallel) {
    const int nx = static_cast<int>(xs.size());
    const int np = static_cast<int>(ps.size());
    std::vector<HamiltonianGridRow> rows(static_cast<std::size_t>(nx) * np);
#pragma omp parallel for collapse(2) schedule(dynamic) if (parallel)
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < np; ++j) {
            const HamiltonianEval ev = hamiltonian(spec, xs[i], ps[j]);
            const HamiltonianGradient g = hamiltonian_gradient(spec, xs[i], ps[j]);
            rows[static_cast<std::size_t>(i) * np + j] =
                HamiltonianGridRow{xs[i], ps[j], ev.value, g.dHdx, g.dHdp, ev.iterations,
                                   ev.residual};
        }
    }
    return rows;
}

}  // namespace

std::vector<HamiltonianGridRow> hamiltonian_grid(const ModelSpec& spec,
                                                 const std::vector<double>& xs,
                                                 const std::vector<double>& ps) {
    return grid_impl(spec, xs, ps, true);
}

std::vector<HamiltonianGridRow> hamiltonian_grid_serial(const ModelSpec& spec,
                                                        const std::vector<double>& xs,
                                                        const std::vector<double>& ps) {
    return grid_impl(spec, xs, ps, false);
}

}  // namespace cirld
