// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Budgets are sized so the whole suite runs in a few minutes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cirld/action.hpp"
#include "cirld/averaging.hpp"
#include "cirld/config.hpp"
#include "cirld/lagrangian.hpp"
#include "cirld/ldp.hpp"
#include "cirld/simulate.hpp"
#include "cirld/spectral.hpp"

namespace fs = std::filesystem;
using namespace cirld;

namespace {

int n_failed = 0;

void report(int criterion, bool ok, const std::string& what) {
    std::printf("%s  criterion %2d: %s\n", ok ? "PASS" : "FAIL", criterion, what.c_str());
    std::fflush(stdout);
    if (!ok) ++n_failed;
}

// Wall-clock guard for the criteria that carry a runtime budget.
class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) v[i] = lo + (hi - lo) * i / (count - 1);
    return v;
}

std::vector<double> logspace(double lo, double hi, int count) {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i)
        v[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1));
    return v;
}

ModelSpec load_fixture(const char* name) {
    return load_config(std::string(CIRLD_CONFIG_DIR) + "/" + name);
}

ModelSpec mu02_symmetric() {
    ModelSpec s;
    s.eta = 1.0;
    s.theta = 1.0;
    s.mu = {0.0, 2.0};
    s.q_field.base = SquareMat(2);
    s.q_field.base(0, 1) = 1.0;
    s.q_field.base(1, 0) = 1.0;
    s.q_field.slope = SquareMat(2);
    s.allow_nonfeller = true;
    return s;
}

const std::vector<double> kXGrid = linspace(0.2, 5.0, 10);
const std::vector<double> kPGrid = linspace(-3.0, 3.0, 10);

// ---- 1: eigenvalue vs simplex-oracle equivalence ---------------------------

void criterion_1() {
    const Stopwatch clock;
    const ModelSpec two = load_fixture("two_regime.cfg");
    const ModelSpec three = load_fixture("three_regime.cfg");
    double worst = 0.0;
#pragma omp parallel for collapse(2) schedule(dynamic) reduction(max : worst)
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            const double x = kXGrid[i], p = kPGrid[j];
            const double g2 =
                std::fabs(hamiltonian(two, x, p).value -
                          variational_hamiltonian_oracle(two, x, p, 200));
            const double g3 =
                std::fabs(hamiltonian(three, x, p).value -
                          variational_hamiltonian_oracle(three, x, p, 60));
            worst = std::max(worst, std::max(g2, g3));
        }
    }
    const double closed = (std::sqrt(8.0) - 1.0) / 2.0;
    const double point_gap = std::fabs(hamiltonian(mu02_symmetric(), 1.0, 1.0).value - closed);
    const double secs = clock.seconds();
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "eigenvalue vs simplex oracle: max |gap| = %.2e (tol 1e-4), closed-form point "
                  "gap = %.2e (tol 1e-9), %.1fs (budget 60s)",
                  worst, point_gap, secs);
    report(1, worst <= 1e-4 && point_gap <= 1e-9 && secs <= 60.0, buf);
}

// ---- 2: H(x,0) = 0, positive eigenvector, eigen residual -------------------

void criterion_2() {
    double worst_h0 = 0.0, worst_resid = 0.0;
    bool positive = true;
    for (const char* name : {"two_regime.cfg", "three_regime.cfg"}) {
        const ModelSpec s = load_fixture(name);
        for (double x : kXGrid) {
            worst_h0 = std::max(worst_h0, std::fabs(hamiltonian(s, x, 0.0).value));
            for (double p : kPGrid) {
                const HamiltonianEval ev = hamiltonian(s, x, p);
                worst_resid = std::max(worst_resid, ev.residual);
                for (double c : ev.right_eigvec) positive = positive && c > 0.0;
            }
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "max |H(x,0)| = %.2e (tol 1e-12), eigvec positive = %s, max residual = %.2e "
                  "(tol 1e-10)",
                  worst_h0, positive ? "yes" : "NO", worst_resid);
    report(2, worst_h0 <= 1e-12 && positive && worst_resid <= 1e-10, buf);
}

// ---- 3: Legendre duality ----------------------------------------------------

void criterion_3() {
    double worst_rt = 0.0;
    for (const char* name : {"two_regime.cfg", "three_regime.cfg"}) {
        const ModelSpec s = load_fixture(name);
        const auto xs = linspace(0.2, 5.0, 10);
        const auto ps = linspace(-3.0, 3.0, 10);
#pragma omp parallel for collapse(2) schedule(dynamic) reduction(max : worst_rt)
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) {
                const double h = hamiltonian(s, xs[i], ps[j]).value;
                worst_rt = std::max(worst_rt,
                                    std::fabs(duality_roundtrip(s, xs[i], ps[j]) - h));
            }
    }

    const ModelSpec one = [] {
        ModelSpec s;
        s.eta = 1.4;
        s.theta = 0.8;
        s.mu = {2.3};
        s.q_field.base = SquareMat(1);
        s.q_field.slope = SquareMat(1);
        return s;
    }();
    std::mt19937 gen(2026);
    std::uniform_real_distribution<double> ux(0.1, 5.0), uv(-4.0, 4.0);
    double worst_closed = 0.0;
    for (int t = 0; t < 20; ++t) {
        const double x = ux(gen), v = uv(gen);
        const double a = one.eta * (one.mu[0] - x);
        const double b = one.theta * one.theta * x;
        const double exact = (v - a) * (v - a) / (2.0 * b);
        worst_closed = std::max(worst_closed, std::fabs(legendre(one, x, v).value - exact));
    }

    double worst_flow = 0.0;
    for (const char* name : {"two_regime.cfg", "three_regime.cfg"}) {
        const ModelSpec s = load_fixture(name);
        for (double x : logspace(0.2, 20.0, 10))
            worst_flow = std::max(worst_flow, legendre(s, x, averaged_drift(s, x)).value);
    }
    char buf[180];
    std::snprintf(buf, sizeof(buf),
                  "round-trip max gap = %.2e (tol 1e-6), closed-form max gap = %.2e (tol 1e-8), "
                  "max L(x,vbar) = %.2e (tol 1e-10)",
                  worst_rt, worst_closed, worst_flow);
    report(3, worst_rt <= 1e-6 && worst_closed <= 1e-8 && worst_flow <= 1e-10, buf);
}

// ---- 4: gradient checks -----------------------------------------------------

void criterion_4() {
    std::mt19937 gen(404);
    std::uniform_real_distribution<double> ux(0.2, 5.0), up(-3.0, 3.0);
    double worst_rel = 0.0;
    for (const char* name : {"two_regime.cfg", "three_regime.cfg"}) {
        const ModelSpec s = load_fixture(name);
        for (int t = 0; t < 25; ++t) {
            const double x = ux(gen), p = up(gen);
            const HamiltonianGradient g = hamiltonian_gradient(s, x, p);
            const double h = 1e-6;
            const double fdp =
                (hamiltonian(s, x, p + h).value - hamiltonian(s, x, p - h).value) / (2 * h);
            const double fdx =
                (hamiltonian(s, x + h, p).value - hamiltonian(s, x - h, p).value) / (2 * h);
            worst_rel = std::max(worst_rel,
                                 std::fabs(g.dHdp - fdp) / std::max(1.0, std::fabs(fdp)));
            worst_rel = std::max(worst_rel,
                                 std::fabs(g.dHdx - fdx) / std::max(1.0, std::fabs(fdx)));
        }
    }
    double worst_drift = 0.0;
    for (const char* name : {"two_regime.cfg", "three_regime.cfg"}) {
        const ModelSpec s = load_fixture(name);
        for (double x : kXGrid)
            worst_drift = std::max(
                worst_drift, std::fabs(hamiltonian_gradient(s, x, 0.0).dHdp - averaged_drift(s, x)));
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "eigen-perturbation vs FD: max rel err = %.2e (tol 1e-6); |dHdp(x,0) - vbar| = "
                  "%.2e (tol 1e-8)",
                  worst_rel, worst_drift);
    report(4, worst_rel <= 1e-6 && worst_drift <= 1e-8, buf);
}

// ---- 5: Donsker-Varadhan functional ----------------------------------------

void criterion_5() {
    double worst_stat = 0.0;
    for (const char* name : {"two_regime.cfg", "three_regime.cfg"}) {
        const ModelSpec s = load_fixture(name);
        for (double x : logspace(0.05, 1000.0, 20))
            worst_stat = std::max(worst_stat, dv_functional(s, x, stationary(s, x)));
    }

    // Dense 1-D scan for the two-regime fixture at x = 1.
    const ModelSpec two = load_fixture("two_regime.cfg");
    const SquareMat q = rate_matrix(two, 1.0);
    double worst_scan = 0.0;
    for (const auto& probs : {std::vector<double>{0.9, 0.1}, std::vector<double>{0.3, 0.7}}) {
        double best = 1e300;
        const int M = 1000000;
        for (int k = 0; k <= M; ++k) {
            const double phi = -10.0 + 20.0 * k / M;
            const double f = probs[0] * q(0, 1) * (std::exp(phi) - 1.0) +
                             probs[1] * q(1, 0) * (std::exp(-phi) - 1.0);
            best = std::min(best, f);
        }
        SimplexMeasure pi;
        pi.probs = probs;
        worst_scan = std::max(worst_scan, std::fabs(dv_functional(two, 1.0, pi) - (-best)));
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "max I(x, pi_x) = %.2e (tol 1e-10); dense-scan max gap = %.2e (tol 1e-6)",
                  worst_stat, worst_scan);
    report(5, worst_stat <= 1e-10 && worst_scan <= 1e-6, buf);
}

// ---- 6: averaging-principle trend -------------------------------------------

void criterion_6() {
    const Stopwatch clock;
    const ModelSpec two = load_fixture("two_regime.cfg");
    const LdpReport rep = averaging_error_curve(two, {100, 1000, 10000}, 1.0, 0.01, 1.0, 1, 1000,
                                                1);
    const ModelSpec one = load_fixture("single_regime.cfg");
    const LdpReport slope = averaging_error_curve(one, {100, 1000, 10000}, 1.0, 0.01, 1.0, 1,
                                                  1000, 1);
    const double secs = clock.seconds();
    char buf[220];
    std::snprintf(buf, sizeof(buf),
                  "sup-error %.4f > %.4f > %.4f (strict decrease %s); single-regime log-log "
                  "slope = %.3f (in [-0.7,-0.3]), %.1fs (budget 300s)",
                  rep.estimate[0], rep.estimate[1], rep.estimate[2],
                  rep.trend_ok ? "yes" : "NO", slope.loglog_slope, secs);
    report(6, rep.trend_ok && slope.loglog_slope >= -0.7 && slope.loglog_slope <= -0.3 &&
                  secs <= 300.0,
           buf);
}

// ---- 7: minimum-action sanity -----------------------------------------------

void criterion_7() {
    const ModelSpec s = load_fixture("two_regime.cfg");
    const int K = 20;
    const AveragedFlow flow = limit_ode(s, 1.0, 1.0, 1.0 / K);
    const double x_end = flow.xbar.back();

    auto [path, res] = minimize_action(s, 1.0, x_end, 1.0, K);

    double sup_dist = 0.0;
    for (int k = 0; k <= K; ++k)
        sup_dist = std::max(sup_dist, std::fabs(path.nodes[k] - flow.xbar[k]));

    PathDiscretization line;
    line.T = 1.0;
    line.nodes.resize(K + 1);
    for (int k = 0; k <= K; ++k) line.nodes[k] = 1.0 + (x_end - 1.0) * k / K;
    const double init_action = action(s, line).action;

    double el_resid = 0.0;
    for (int k = 1; k < K; ++k) {
        PathDiscretization up = path, dn = path;
        up.nodes[k] += 1e-6;
        dn.nodes[k] -= 1e-6;
        el_resid = std::max(el_resid,
                            std::fabs(action(s, up).action - action(s, dn).action) / 2e-6);
    }
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "zero-cost action = %.2e (tol 1e-5), sup dist to flow = %.2e (tol 1e-2), <= "
                  "initial (%s), EL residual = %.2e (tol 1e-5)",
                  res.action, sup_dist, res.action <= init_action + 1e-12 ? "yes" : "NO",
                  el_resid);
    report(7, res.action <= 1e-5 && sup_dist <= 1e-2 && res.action <= init_action + 1e-12 &&
                  el_resid <= 1e-5,
           buf);
}

// ---- 8: log-Laplace convergence trend ----------------------------------------

double spearman(const std::vector<double>& xv, const std::vector<double>& yv) {
    const int m = static_cast<int>(xv.size());
    auto ranks = [m](const std::vector<double>& v) {
        std::vector<int> idx(m), r(m);
        for (int i = 0; i < m; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
        for (int i = 0; i < m; ++i) r[idx[i]] = i;
        return r;
    };
    const auto rx = ranks(xv), ry = ranks(yv);
    double d2 = 0.0;
    for (int i = 0; i < m; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    return 1.0 - 6.0 * d2 / (m * (double(m) * m - 1.0));
}

void criterion_8() {
    const Stopwatch clock;
    const ModelSpec s = load_fixture("two_regime.cfg");
    const double T = 1.0;
    const int K = 20;
    const AveragedFlow flow = limit_ode(s, 1.0, T, T / K);
    const double a = flow.xbar.back();
    auto f_scalar = [a](double y) { return -(y - a) * (y - a); };
    auto f = [a](double x, int) { return -(x - a) * (x - a); };
    const double v_limit = nisio_value(s, f_scalar, 1.0, T, K);

    const std::vector<long long> ladder{50, 100, 200, 400};
    std::vector<double> ns, gaps;
    std::string detail;
    for (long long n : ladder) {
        const LogLaplaceEstimate est = mc_log_laplace(s, n, T, f, 1.0, 1, 10000, 1);
        ns.push_back(static_cast<double>(n));
        gaps.push_back(std::fabs(est.value - v_limit));
        char b[48];
        std::snprintf(b, sizeof(b), " %.1e", gaps.back());
        detail += b;
    }
    const double rho = spearman(ns, gaps);
    const double secs = clock.seconds();
    char buf[220];
    std::snprintf(buf, sizeof(buf),
                  "|log-Laplace - semigroup value| over n ladder:%s, Spearman rho = %.2f (< 0), "
                  "%.1fs (budget 600s)",
                  detail.c_str(), rho, secs);
    report(8, rho < 0.0 && secs <= 600.0, buf);
}

// ---- 9: tube-probability trend ------------------------------------------------

void criterion_9() {
    const ModelSpec s = load_fixture("two_regime.cfg");
    const double T = 1.0;
    const int K = 20;
    const AveragedFlow flow = limit_ode(s, 1.0, T, T / K);
    const double x_end = flow.xbar.back() + 0.25;
    auto [gamma, res] = minimize_action(s, 1.0, x_end, T, K);
    const double action_ref = res.action;

    const std::vector<long long> ladder{50, 100, 200};
    std::vector<double> rates;
    std::vector<long long> hits;
    for (long long n : ladder) {
        const TubeEstimate est = tube_probability(s, n, gamma, 0.06, 200000, 1);
        if (est.hits == 0) break;
        rates.push_back(est.rate);
        hits.push_back(est.hits);
    }

    bool window = false, approach = true;
    std::string detail;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        char b[64];
        std::snprintf(b, sizeof(b), " n=%lld rate=%.4f(%.0f%%)", ladder[i], rates[i],
                      100.0 * rates[i] / action_ref);
        detail += b;
        if (i > 0 && std::fabs(rates[i] - action_ref) >= std::fabs(rates[i - 1] - action_ref))
            approach = false;
    }
    if (!rates.empty())
        window = std::fabs(rates.back() - action_ref) <= 0.3 * action_ref;
    char buf[260];
    std::snprintf(buf, sizeof(buf),
                  "tube rate vs action %.4f:%s; within 30%% at largest n with hits (%s), gap "
                  "shrinking toward it (%s)",
                  action_ref, detail.c_str(), window ? "yes" : "NO", approach ? "yes" : "NO");
    report(9, window && approach && rates.size() == 3, buf);
}

// ---- 10: byte-identical CLI outputs -------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_10() {
    const std::string cfg = std::string(CIRLD_CONFIG_DIR) + "/two_regime.cfg";
    const fs::path base = fs::temp_directory_path() / "cirld_acceptance";
    fs::remove_all(base);

    const std::vector<std::string> commands = {
        "validate",
        "simulate --n 100 --T 0.5 --dt 0.01",
        "simulate --n 100 --T 0.5 --dt 0.01 --paths 16",
        "hamiltonian-grid --x-count 4 --p-count 4",
        "lagrangian-grid --x-count 3 --v-count 3",
        "stationary --x-count 8",
        "limit-ode --x0 1 --T 1 --dt 0.05",
        "optimal-path --x-start 1 --x-end 1.6 --T 1 --K 10",
        "nisio --x0 1 --T 1 --K 8 --target 1.5",
        "verify-averaging --n-ladder 50,200 --paths 100 --dt 0.05",
        "verify-ldp --n-ladder 50,100 --paths 200 --K 8 --displace 0.3 --delta 0.15",
        "dv-check --x-count 5",
    };
    bool all_ok = true;
    std::string failed;
    for (std::size_t c = 0; c < commands.size(); ++c) {
        const fs::path d1 = base / ("a" + std::to_string(c));
        const fs::path d2 = base / ("b" + std::to_string(c));
        fs::create_directories(d1);
        fs::create_directories(d2);
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path& dir = rep == 0 ? d1 : d2;
            const std::string threads = rep == 0 ? "1" : "4";
            const std::string cmd = std::string(CIRLD_BIN) + " --config " + cfg + " --out-dir " +
                                    dir.string() + " --seed 42 --threads " + threads + " " +
                                    commands[c] + " > /dev/null 2>&1";
            if (std::system(cmd.c_str()) != 0) {
                all_ok = false;
                failed = commands[c] + " (nonzero exit)";
            }
        }
        for (const auto& entry : fs::directory_iterator(d1)) {
            if (entry.path().extension() != ".csv") continue;
            const fs::path other = d2 / entry.path().filename();
            if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
                all_ok = false;
                failed = commands[c] + " (" + entry.path().filename().string() + " differs)";
            }
        }
    }
    report(10, all_ok,
           all_ok ? "byte-identical CSVs across reruns and worker counts for every subcommand"
                  : "determinism failure at: " + failed);
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::printf("%d of 10 criteria passed\n", 10 - n_failed);
    return n_failed == 0 ? 0 : 1;
}
