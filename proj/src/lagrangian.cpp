#include "cirld/lagrangian.hpp"

#include <cmath>
#include <limits>

#include "cirld/spectral.hpp"

namespace cirld {

namespace {

constexpr double kBracketLimit = 1e6;
constexpr double kSlopeTol = 1e-8;

struct PointEval {
    double h;
    double dhdp;
};

PointEval eval_point(const ModelSpec& spec, double x, double p) {
    const HamiltonianEval ev = hamiltonian(spec, x, p);
    const HamiltonianGradient g = hamiltonian_gradient(spec, x, p, ev);
    return {ev.value, g.dHdp};
}

LegendreEval solve(const ModelSpec& spec, double x, double v, bool has_hint, double hint) {
    check_domain(spec, x);
    LegendreEval out;

    double lo, hi, slope_lo, slope_hi;
    bool bracketed = false;

    if (has_hint) {
        double step = 0.5;
        lo = hint - step;
        hi = hint + step;
        slope_lo = eval_point(spec, x, lo).dhdp;
        slope_hi = eval_point(spec, x, hi).dhdp;
        for (int k = 0; k < 8 && !(slope_lo <= v && v <= slope_hi); ++k) {
            step *= 2.0;
            if (slope_lo > v) {
                lo -= step;
                slope_lo = eval_point(spec, x, lo).dhdp;
            }
            if (slope_hi < v) {
                hi += step;
                slope_hi = eval_point(spec, x, hi).dhdp;
            }
        }
        bracketed = slope_lo <= v && v <= slope_hi;
    }
    if (!bracketed) {
        double span = 1.0;
        while (true) {
            lo = -span;
            hi = span;
            slope_lo = eval_point(spec, x, lo).dhdp;
            slope_hi = eval_point(spec, x, hi).dhdp;
            if (slope_lo <= v && v <= slope_hi) break;
            span *= 2.0;
            if (span > kBracketLimit) {
                out.value = std::numeric_limits<double>::infinity();
                out.unreachable = true;
                return out;
            }
        }
    }

    double p = 0.5 * (lo + hi);
    PointEval e = eval_point(spec, x, p);
    for (int it = 0; it < 300; ++it) {
        const double psi = e.dhdp - v;
        if (std::fabs(psi) <= kSlopeTol) {
            out.value = p * v - e.h;
            out.p_star = p;
            out.converged = true;
            return out;
        }
        if (psi < 0.0)
            lo = p;
        else
            hi = p;

        // Curvature from a one-sided difference of dH/dp; Newton falls back
        // to bisection whenever the step leaves the bracket.
        const double fd = 1e-6 * std::max(1.0, std::fabs(p));
        const double slope_fd = eval_point(spec, x, p + fd).dhdp;
        const double curv = (slope_fd - e.dhdp) / fd;
        double p_next = curv > 0.0 ? p - psi / curv : std::numeric_limits<double>::quiet_NaN();
        if (!(p_next > lo && p_next < hi)) p_next = 0.5 * (lo + hi);
        p = p_next;
        e = eval_point(spec, x, p);
    }
    out.value = p * v - e.h;
    out.p_star = p;
    out.converged = false;
    return out;
}

}  // namespace

LegendreEval legendre(const ModelSpec& spec, double x, double v) {
    return solve(spec, x, v, false, 0.0);
}

LegendreEval legendre(const ModelSpec& spec, double x, double v, double p_hint) {
    return solve(spec, x, v, true, p_hint);
}

double duality_roundtrip(const ModelSpec& spec, double x, double p) {
    check_domain(spec, x);
    auto g = [&](double v) -> double {
        const LegendreEval le = legendre(spec, x, v);
        if (le.unreachable) return -std::numeric_limits<double>::infinity();
        return p * v - le.value;
    };

    // Bracket the maximum around the zero-cost velocity.
    const double v0 = hamiltonian_gradient(spec, x, 0.0).dHdp;
    double w = 1.0;
    double lo = v0 - w, hi = v0 + w;
    double g_lo = g(lo), g_mid = g(v0), g_hi = g(hi);
    while ((g_lo >= g_mid || g_hi >= g_mid) && w < 1e8) {
        w *= 2.0;
        lo = v0 - w;
        hi = v0 + w;
        g_lo = g(lo);
        g_hi = g(hi);
        g_mid = std::max(g_mid, std::max(g(v0 - w / 2), g(v0 + w / 2)));
    }

    const double gr = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double gc = g(c), gd = g(d);
    while (b - a > 1e-9 * std::max(1.0, std::fabs(a) + std::fabs(b))) {
        if (gc > gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - gr * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + gr * (b - a);
            gd = g(d);
        }
    }
    return std::max(gc, gd);
}

std::vector<LagrangianGridRow> lagrangian_grid(const ModelSpec& spec,
                                               const std::vector<double>& xs,
                                               const std::vector<double>& vs) {
    const int nx = static_cast<int>(xs.size());
    const int nv = static_cast<int>(vs.size());
    std::vector<LagrangianGridRow> rows(static_cast<std::size_t>(nx) * nv);
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < nv; ++j) {
            const LegendreEval le = legendre(spec, xs[i], vs[j]);
            rows[static_cast<std::size_t>(i) * nv + j] =
                LagrangianGridRow{xs[i], vs[j], le.value, le.p_star};
        }
    }
    return rows;
}

}  // namespace cirld
