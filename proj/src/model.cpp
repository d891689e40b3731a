#include "cirld/model.hpp"

#include <algorithm>
#include <cmath>

namespace cirld {

void RateMatrixField::eval(double x, SquareMat& m) const {
    const int n = size();
    if (m.n != n) m = SquareMat(n);
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double q = rate(i, j, x);
            m(i, j) = q;
            row += q;
        }
        m(i, i) = -row;
    }
}

double RateMatrixField::max_total_rate() const {
    const int n = size();
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double at0 = 0.0, at1 = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            at0 += base(i, j);
            at1 += base(i, j) + slope(i, j);
        }
        worst = std::max({worst, at0, at1});
    }
    return worst;
}

namespace {

// Strong connectivity of the support digraph [q_ij(x) > 0] via forward and
// backward reachability from node 0.
bool support_irreducible(const RateMatrixField& f, double x) {
    const int n = f.size();
    if (n == 1) return true;
    auto reach = [&](bool transpose) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < n; ++v) {
                if (v == u || seen[v]) continue;
                const double q = transpose ? f.rate(v, u, x) : f.rate(u, v, x);
                if (q > 0.0) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    return reach(false) && reach(true);
}

}  // namespace

ValidationReport validate(const ModelSpec& spec) {
    ValidationReport rep;
    const int n = spec.n_regimes();
    if (n < 1) {
        rep.errors.push_back("mu: at least one regime mean is required");
        return rep;
    }
    if (!(spec.eta > 0.0)) rep.errors.push_back("eta must be positive");
    if (!(spec.theta > 0.0)) rep.errors.push_back("theta must be positive");
    if (!(spec.x_min > 0.0)) rep.errors.push_back("x_min must be positive");

    for (int i = 0; i < n; ++i) {
        if (spec.mu[i] < 0.0) {
            rep.errors.push_back("mu[" + std::to_string(i + 1) + "] must be positive");
        } else if (spec.mu[i] == 0.0) {
            auto msg = "mu[" + std::to_string(i + 1) + "] is zero";
            if (spec.allow_nonfeller)
                rep.warnings.push_back(msg + " (allowed by override)");
            else
                rep.errors.push_back(msg);
        }
        if (spec.eta > 0.0 && spec.theta > 0.0) {
            const double lhs = 2.0 * spec.eta * spec.mu[i];
            const double rhs = spec.theta * spec.theta;
            if (lhs < rhs) {
                auto msg = "2*eta*mu[" + std::to_string(i + 1) + "] = " + std::to_string(lhs) +
                           " < theta^2 = " + std::to_string(rhs);
                if (spec.allow_nonfeller)
                    rep.warnings.push_back(msg + " (allowed by override)");
                else
                    rep.errors.push_back(msg);
            }
        }
    }

    const auto& f = spec.q_field;
    if (f.base.n != n || f.slope.n != n) {
        rep.errors.push_back("q matrices must be " + std::to_string(n) + "x" + std::to_string(n));
        return rep;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (f.base(i, j) < 0.0)
                rep.errors.push_back("q.base[" + std::to_string(i + 1) + "][" +
                                     std::to_string(j + 1) + "] is negative");
            if (f.base(i, j) + f.slope(i, j) < 0.0)
                rep.errors.push_back("q.base+q.slope[" + std::to_string(i + 1) + "][" +
                                     std::to_string(j + 1) + "] is negative");
            if (f.base(i, j) == 0.0 && f.slope(i, j) > 0.0)
                rep.warnings.push_back("q[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) +
                                       "] vanishes as x -> 0 (zero base, positive slope)");
        }
    }

    if (rep.errors.empty() && n > 1) {
        // 16 log-spaced probes; the support pattern of this family is
        // x-independent unless a base entry is zero, which the warning above
        // already flags.
        const double lo = std::log(spec.x_min > 0.0 ? spec.x_min : 1e-6);
        const double hi = std::log(1e4);
        for (int k = 0; k < 16; ++k) {
            const double x = std::exp(lo + (hi - lo) * k / 15.0);
            if (!support_irreducible(f, x)) {
                rep.errors.push_back("rate matrix is reducible at x = " + std::to_string(x));
                break;
            }
        }
    }
    return rep;
}

void check_domain(const ModelSpec& spec, double x) {
    if (!(x >= spec.x_min))
        throw std::domain_error("x = " + std::to_string(x) + " below x_min = " +
                                std::to_string(spec.x_min));
}

SquareMat rate_matrix(const ModelSpec& spec, double x) {
    check_domain(spec, x);
    SquareMat m(spec.n_regimes());
    spec.q_field.eval(x, m);
    return m;
}

std::vector<double> drift_vector(const ModelSpec& spec, double x) {
    check_domain(spec, x);
    std::vector<double> d(spec.n_regimes());
    for (int i = 0; i < spec.n_regimes(); ++i) d[i] = spec.eta * (spec.mu[i] - x);
    return d;
}

}  // namespace cirld
