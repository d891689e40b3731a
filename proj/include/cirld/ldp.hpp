#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cirld/action.hpp"
#include "cirld/model.hpp"
#include "cirld/simulate.hpp"

namespace cirld {

struct LogLaplaceEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

struct TubeEstimate {
    double p_hat = 0.0;
    double stderr_ = 0.0;
    double ci_lo = 0.0;  // 95% exact binomial
    double ci_hi = 0.0;
    long long hits = 0;
    // -(1/n) log p_hat; when there are no hits this is the one-sided lower
    // bound -(1/n) log ci_hi and rate_is_lower_bound is set.
    double rate = 0.0;
    bool rate_is_lower_bound = false;
};

struct LdpReport {
    std::vector<long long> n_ladder;
    std::vector<double> estimate;
    std::vector<double> stderr_;
    double analytic = 0.0;
    bool trend_ok = false;       // strict decrease along the ladder
    double loglog_slope = 0.0;   // least-squares slope of log(est) vs log(n)
};

/// (1/n) log E[exp(n f(X_n(t), Lambda_n(t)))] over n_paths simulations,
/// stabilized with a log-sum-exp shift; the standard error comes from the
/// delta method on the log. Path p draws from the (seed, p) stream, so the
/// same seed gives common random numbers across an n-ladder.
LogLaplaceEstimate mc_log_laplace(const ModelSpec& spec, long long n, double t,
                                  const std::function<double(double, int)>& f, double x0, int k0,
                                  int n_paths, std::uint64_t seed, const SimOptions& opts = {});
LogLaplaceEstimate mc_log_laplace_serial(const ModelSpec& spec, long long n, double t,
                                         const std::function<double(double, int)>& f, double x0,
                                         int k0, int n_paths, std::uint64_t seed,
                                         const SimOptions& opts = {});

/// Fraction of paths staying within delta of gamma at every grid time,
/// started at gamma(0) in regime k0, with an exact (Clopper-Pearson) 95% CI.
TubeEstimate tube_probability(const ModelSpec& spec, long long n, const PathDiscretization& gamma,
                              double delta, int n_paths, std::uint64_t seed, int k0 = 1,
                              const SimOptions& opts = {});

/// Mean sup-distance between simulated paths and the averaged flow for each n
/// in the ladder. The verdict asks for a strict decrease; the log-log slope
/// is reported for the noise-scaling check.
LdpReport averaging_error_curve(const ModelSpec& spec, const std::vector<long long>& n_ladder,
                                double T, double dt, double x0, int k0, int n_paths,
                                std::uint64_t seed, const SimOptions& opts = {});

/// Regularized incomplete beta function and the exact binomial interval it
/// induces (exposed for tests).
double incomplete_beta(double a, double b, double x);
void binomial_ci(long long hits, long long trials, double alpha, double& lo, double& hi);

}  // namespace cirld
