#include "cirld/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cirld/averaging.hpp"
#include "cirld/rng.hpp"

namespace cirld {

namespace {

constexpr int kPathBlock = 16;

void check_inputs(const ModelSpec& spec, long long n, double T, double x0, int k0, int n_paths) {
    const auto rep = validate(spec);
    if (!rep.ok()) throw std::invalid_argument("invalid model spec: " + rep.errors.front());
    if (n < 1 || n_paths < 1) throw std::invalid_argument("n and n_paths must be >= 1");
    if (!(T > 0.0) || !(x0 > 0.0)) throw std::invalid_argument("T and x0 must be positive");
    if (k0 < 1 || k0 > spec.n_regimes()) throw std::invalid_argument("k0 outside the regime set");
}

// Runs one path to time T without recording and returns the terminal state.
void terminal_state(const ModelSpec& spec, long long n, double T, double x0, int k0,
                    std::uint64_t seed, std::uint64_t stream, const SimOptions& opts, double& x,
                    int& regime) {
    const int n_sub = substeps_for(spec, n, T, opts);
    CounterRng rng(seed, stream);
    detail::StepperStats stats;
    x = x0;
    regime = k0 - 1;
    detail::advance(spec, n, T / n_sub, n_sub, x, regime, rng, stats);
    regime += 1;
}

// Fills out[p] for each path with fn(p) — blocked so any thread count gives
// the same bits.
template <typename T, typename Fn>
void per_path(int n_paths, bool parallel, std::vector<T>& out, Fn&& fn) {
    out.resize(n_paths);
    const int n_blocks = (n_paths + kPathBlock - 1) / kPathBlock;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int b = 0; b < n_blocks; ++b) {
        const int lo = b * kPathBlock;
        const int hi = std::min(n_paths, lo + kPathBlock);
        for (int p = lo; p < hi; ++p) out[p] = fn(p);
    }
}

LogLaplaceEstimate log_laplace_impl(const ModelSpec& spec, long long n, double t,
                                    const std::function<double(double, int)>& f, double x0, int k0,
                                    int n_paths, std::uint64_t seed, const SimOptions& opts,
                                    bool parallel) {
    check_inputs(spec, n, t, x0, k0, n_paths);
    std::vector<double> exponent;
    per_path(n_paths, parallel, exponent, [&](int p) {
        double x;
        int regime;
        terminal_state(spec, n, t, x0, k0, seed, static_cast<std::uint64_t>(p), opts, x, regime);
        return static_cast<double>(n) * f(x, regime);
    });

    const double shift = *std::max_element(exponent.begin(), exponent.end());
    double mean_w = 0.0;
    for (double a : exponent) mean_w += std::exp(a - shift);
    mean_w /= n_paths;
    double var_w = 0.0;
    for (double a : exponent) {
        const double d = std::exp(a - shift) - mean_w;
        var_w += d * d;
    }
    var_w = n_paths > 1 ? var_w / (n_paths - 1) : 0.0;

    LogLaplaceEstimate est;
    est.value = (shift + std::log(mean_w)) / static_cast<double>(n);
    est.stderr_ = std::sqrt(var_w / n_paths) / (mean_w * static_cast<double>(n));
    return est;
}

}  // namespace

LogLaplaceEstimate mc_log_laplace(const ModelSpec& spec, long long n, double t,
                                  const std::function<double(double, int)>& f, double x0, int k0,
                                  int n_paths, std::uint64_t seed, const SimOptions& opts) {
    return log_laplace_impl(spec, n, t, f, x0, k0, n_paths, seed, opts, true);
}

LogLaplaceEstimate mc_log_laplace_serial(const ModelSpec& spec, long long n, double t,
                                         const std::function<double(double, int)>& f, double x0,
                                         int k0, int n_paths, std::uint64_t seed,
                                         const SimOptions& opts) {
    return log_laplace_impl(spec, n, t, f, x0, k0, n_paths, seed, opts, false);
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    // Lentz continued fraction.
    auto betacf = [](double aa, double bb, double xx) {
        const double qab = aa + bb, qap = aa + 1.0, qam = aa - 1.0;
        double c = 1.0, d = 1.0 - qab * xx / qap;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        d = 1.0 / d;
        double h = d;
        for (int m = 1; m <= 300; ++m) {
            const int m2 = 2 * m;
            double num = m * (bb - m) * xx / ((qam + m2) * (aa + m2));
            d = 1.0 + num * d;
            if (std::fabs(d) < 1e-300) d = 1e-300;
            c = 1.0 + num / c;
            if (std::fabs(c) < 1e-300) c = 1e-300;
            d = 1.0 / d;
            h *= d * c;
            num = -(aa + m) * (qab + m) * xx / ((aa + m2) * (qap + m2));
            d = 1.0 + num * d;
            if (std::fabs(d) < 1e-300) d = 1e-300;
            c = 1.0 + num / c;
            if (std::fabs(c) < 1e-300) c = 1e-300;
            d = 1.0 / d;
            const double del = d * c;
            h *= del;
            if (std::fabs(del - 1.0) < 3e-12) break;
        }
        return h;
    };
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                         b * std::log1p(-x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

namespace {

double beta_quantile(double prob, double a, double b) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (incomplete_beta(a, b, mid) < prob)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

void binomial_ci(long long hits, long long trials, double alpha, double& lo, double& hi) {
    const double k = static_cast<double>(hits);
    const double nn = static_cast<double>(trials);
    lo = hits == 0 ? 0.0 : beta_quantile(alpha / 2.0, k, nn - k + 1.0);
    hi = hits == trials ? 1.0 : beta_quantile(1.0 - alpha / 2.0, k + 1.0, nn - k);
}

TubeEstimate tube_probability(const ModelSpec& spec, long long n, const PathDiscretization& gamma,
                              double delta, int n_paths, std::uint64_t seed, int k0,
                              const SimOptions& opts) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    const double x0 = gamma.nodes.front();
    check_inputs(spec, n, gamma.T, x0, k0, n_paths);

    const int K = gamma.segments();
    const double dt_out = gamma.dt();
    const int n_sub = substeps_for(spec, n, dt_out, opts);

    std::vector<char> hit;
    per_path(n_paths, true, hit, [&](int p) -> char {
        CounterRng rng(seed, static_cast<std::uint64_t>(p));
        detail::StepperStats stats;
        double x = x0;
        int regime = k0 - 1;
        if (std::fabs(x - gamma.nodes[0]) >= delta) return 0;
        for (int k = 1; k <= K; ++k) {
            detail::advance(spec, n, dt_out / n_sub, n_sub, x, regime, rng, stats);
            if (std::fabs(x - gamma.nodes[k]) >= delta) return 0;
        }
        return 1;
    });

    TubeEstimate est;
    for (char h : hit) est.hits += h;
    const double P = static_cast<double>(n_paths);
    est.p_hat = static_cast<double>(est.hits) / P;
    est.stderr_ = std::sqrt(std::max(0.0, est.p_hat * (1.0 - est.p_hat)) / P);
    binomial_ci(est.hits, n_paths, 0.05, est.ci_lo, est.ci_hi);
    if (est.hits == 0) {
        est.rate = -std::log(est.ci_hi) / static_cast<double>(n);
        est.rate_is_lower_bound = true;
    } else {
        est.rate = -std::log(est.p_hat) / static_cast<double>(n);
    }
    return est;
}

LdpReport averaging_error_curve(const ModelSpec& spec, const std::vector<long long>& n_ladder,
                                double T, double dt, double x0, int k0, int n_paths,
                                std::uint64_t seed, const SimOptions& opts) {
    if (n_ladder.empty()) throw std::invalid_argument("empty n ladder");
    for (std::size_t i = 1; i < n_ladder.size(); ++i)
        if (n_ladder[i] <= n_ladder[i - 1])
            throw std::invalid_argument("n ladder must be strictly increasing");
    check_inputs(spec, n_ladder.front(), T, x0, k0, n_paths);

    const AveragedFlow flow = limit_ode(spec, x0, T, dt);
    const int K = static_cast<int>(flow.times.size()) - 1;
    const double dt_out = T / K;

    LdpReport report;
    report.n_ladder = n_ladder;
    report.analytic = 0.0;

    for (long long n : n_ladder) {
        const int n_sub = substeps_for(spec, n, dt_out, opts);
        std::vector<double> sup_dist;
        per_path(n_paths, true, sup_dist, [&](int p) {
            CounterRng rng(seed, static_cast<std::uint64_t>(p));
            detail::StepperStats stats;
            double x = x0;
            int regime = k0 - 1;
            double sup = 0.0;
            for (int k = 1; k <= K; ++k) {
                detail::advance(spec, n, dt_out / n_sub, n_sub, x, regime, rng, stats);
                sup = std::max(sup, std::fabs(x - flow.xbar[k]));
            }
            return sup;
        });
        double mean = 0.0;
        for (double d : sup_dist) mean += d;
        mean /= n_paths;
        double var = 0.0;
        for (double d : sup_dist) var += (d - mean) * (d - mean);
        var = n_paths > 1 ? var / (n_paths - 1) : 0.0;
        report.estimate.push_back(mean);
        report.stderr_.push_back(std::sqrt(var / n_paths));
    }

    report.trend_ok = true;
    for (std::size_t i = 1; i < report.estimate.size(); ++i)
        report.trend_ok = report.trend_ok && report.estimate[i] < report.estimate[i - 1];

    // log-log least squares
    const int m = static_cast<int>(n_ladder.size());
    if (m >= 2) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (int i = 0; i < m; ++i) {
            const double lx = std::log(static_cast<double>(n_ladder[i]));
            const double ly = std::log(std::max(report.estimate[i], 1e-300));
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        report.loglog_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    return report;
}

}  // namespace cirld
