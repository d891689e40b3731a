#include "cirld/averaging.hpp"

#include <cmath>
#include <stdexcept>

#include "cirld/errors.hpp"

namespace cirld {

SimplexMeasure stationary(const ModelSpec& spec, double x) {
    check_domain(spec, x);
    const int n = spec.n_regimes();
    SimplexMeasure pi;
    if (n == 1) {
        pi.probs = {1.0};
        return pi;
    }
    SquareMat q(n);
    spec.q_field.eval(x, q);

    auto build = [&](SquareMat& a) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = q(j, i);  // transpose: columns of q
        for (int j = 0; j < n; ++j) a(n - 1, j) = 1.0;
    };
    SquareMat a(n);
    build(a);
    std::vector<double> rhs(n, 0.0);
    rhs[n - 1] = 1.0;
    std::vector<double> p = lu_solve(a, rhs);

    // One refinement pass knocks the residual down to rounding level.
    build(a);
    std::vector<double> resid(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += a(i, j) * p[j];
        resid[i] = rhs[i] - s;
    }
    build(a);
    const std::vector<double> corr = lu_solve(a, resid);
    for (int i = 0; i < n; ++i) p[i] += corr[i];

    for (double v : p)
        if (!(v > -1e-9)) throw ConvergenceError("stationary: negative component (reducible q?)");
    pi.probs = std::move(p);
    return pi;
}

double averaged_drift(const ModelSpec& spec, double x) {
    const SimplexMeasure pi = stationary(spec, x);
    double mean_mu = 0.0;
    for (int i = 0; i < spec.n_regimes(); ++i) mean_mu += spec.mu[i] * pi.probs[i];
    return spec.eta * (mean_mu - x);
}

namespace {

std::vector<double> rk4_fixed(const ModelSpec& spec, double x0, int n_steps, double h,
                              int record_every) {
    std::vector<double> out;
    out.reserve(n_steps / record_every + 1);
    out.push_back(x0);
    double x = x0;
    const double floor = spec.x_min;
    auto f = [&](double y) { return averaged_drift(spec, std::max(y, floor)); };
    for (int k = 1; k <= n_steps; ++k) {
        const double k1 = f(x);
        const double k2 = f(x + 0.5 * h * k1);
        const double k3 = f(x + 0.5 * h * k2);
        const double k4 = f(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (k % record_every == 0) out.push_back(x);
    }
    return out;
}

}  // namespace

AveragedFlow limit_ode(const ModelSpec& spec, double x0, double T, double dt, bool refine) {
    if (!(x0 > 0.0)) throw std::invalid_argument("limit_ode: x0 must be positive");
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("limit_ode: T, dt must be positive");
    const int K = static_cast<int>(std::ceil(T / dt - 1e-9));
    const double dt_out = T / K;

    int sub = 1;
    std::vector<double> coarse = rk4_fixed(spec, x0, K * sub, dt_out / sub, sub);
    if (refine) {
        for (int round = 0; round < 20; ++round) {
            const std::vector<double> fine = rk4_fixed(spec, x0, K * sub * 2, dt_out / (sub * 2),
                                                       sub * 2);
            double err = 0.0;
            for (int k = 0; k <= K; ++k) err = std::max(err, std::fabs(fine[k] - coarse[k]));
            coarse = fine;
            sub *= 2;
            if (err / T < 1e-8) break;
        }
    }
    AveragedFlow flow;
    flow.dt_effective = dt_out / sub;
    flow.times.resize(K + 1);
    for (int k = 0; k <= K; ++k) flow.times[k] = k * dt_out;
    flow.xbar = std::move(coarse);
    return flow;
}

}  // namespace cirld
