#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cirld/action.hpp"
#include "cirld/averaging.hpp"
#include "cirld/config.hpp"
#include "cirld/csv.hpp"
#include "cirld/errors.hpp"
#include "cirld/lagrangian.hpp"
#include "cirld/ldp.hpp"
#include "cirld/manifest.hpp"
#include "cirld/simulate.hpp"
#include "cirld/spectral.hpp"

namespace fs = std::filesystem;
using namespace cirld;

namespace {

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i)
        v[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    return v;
}

std::vector<double> logspace(double lo, double hi, int count) {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i)
        v[i] = count == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i /
                                                             (count - 1));
    return v;
}

struct Run {
    ModelSpec spec;
    RunManifest manifest;
    fs::path out_dir;

    fs::path out(const std::string& name) {
        manifest.outputs.push_back(name);
        return out_dir / name;
    }
    void finish() {
        manifest.finished_utc = utc_now();
        manifest.write((out_dir / "manifest.json").string());
    }
};

int cmd_validate(Run& run) {
    const ValidationReport rep = validate(run.spec);
    for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
    for (const auto& e : rep.errors) std::cout << "error: " << e << "\n";
    std::cout << (rep.ok() ? "valid" : "invalid") << "\n";
    return rep.ok() ? 0 : 1;
}

struct SimArgs {
    long long n = 100;
    double T = 1.0, dt = 0.01, x0 = 1.0;
    int k0 = 1, paths = 1;
};

int cmd_simulate(Run& run, const SimArgs& a) {
    const std::string hash = run.manifest.hash();
    if (a.paths == 1) {
        const Trajectory t = simulate_path(run.spec, a.n, a.T, a.dt, a.x0, a.k0,
                                           run.manifest.seed);
        CsvWriter csv(run.out("trajectory.csv").string(), hash, {"t", "x", "regime"});
        for (std::size_t k = 0; k < t.times.size(); ++k)
            csv.row({fmt_double(t.times[k]), fmt_double(t.x[k]), std::to_string(t.regime[k])});
        std::cout << "wrote trajectory.csv (effective step " << fmt_double(t.dt_effective)
                  << ", clamped fraction " << fmt_double(t.clamped_fraction) << ")\n";
    } else {
        const EnsembleSummary e =
            mc_ensemble(run.spec, a.n, a.T, a.dt, a.x0, a.k0, a.paths, run.manifest.seed);
        CsvWriter csv(run.out("ensemble.csv").string(), hash, {"t", "mean_x", "var_x", "n_paths"});
        for (std::size_t k = 0; k < e.times.size(); ++k)
            csv.row({fmt_double(e.times[k]), fmt_double(e.mean_x[k]), fmt_double(e.var_x[k]),
                     std::to_string(e.n_paths)});
        std::cout << "wrote ensemble.csv\n";
    }
    return 0;
}

struct GridArgs {
    double x_lo = 0.2, x_hi = 5.0;
    int x_count = 50;
    double p_lo = -3.0, p_hi = 3.0;
    int p_count = 50;
    double v_lo = -3.0, v_hi = 3.0;
    int v_count = 50;
};

int cmd_hamiltonian_grid(Run& run, const GridArgs& a) {
    const auto rows = hamiltonian_grid(run.spec, linspace(a.x_lo, a.x_hi, a.x_count),
                                       linspace(a.p_lo, a.p_hi, a.p_count));
    CsvWriter csv(run.out("hamiltonian_grid.csv").string(), run.manifest.hash(),
                  {"x", "p", "H", "dHdx", "dHdp", "iters", "residual"});
    for (const auto& r : rows)
        csv.row({fmt_double(r.x), fmt_double(r.p), fmt_double(r.H), fmt_double(r.dHdx),
                 fmt_double(r.dHdp), std::to_string(r.iters), fmt_double(r.residual)});
    std::cout << "wrote hamiltonian_grid.csv (" << rows.size() << " rows)\n";
    return 0;
}

int cmd_lagrangian_grid(Run& run, const GridArgs& a) {
    const auto rows = lagrangian_grid(run.spec, linspace(a.x_lo, a.x_hi, a.x_count),
                                      linspace(a.v_lo, a.v_hi, a.v_count));
    CsvWriter csv(run.out("lagrangian_grid.csv").string(), run.manifest.hash(),
                  {"x", "v", "L", "p_star"});
    for (const auto& r : rows)
        csv.row({fmt_double(r.x), fmt_double(r.v), fmt_double(r.L), fmt_double(r.p_star)});
    std::cout << "wrote lagrangian_grid.csv (" << rows.size() << " rows)\n";
    return 0;
}

int cmd_stationary(Run& run, const GridArgs& a) {
    const auto xs = logspace(std::max(a.x_lo, run.spec.x_min), a.x_hi, a.x_count);
    std::vector<std::string> header{"x"};
    for (int i = 1; i <= run.spec.n_regimes(); ++i) header.push_back("pi_" + std::to_string(i));
    CsvWriter csv(run.out("stationary.csv").string(), run.manifest.hash(), header);
    for (double x : xs) {
        const SimplexMeasure pi = stationary(run.spec, x);
        std::vector<std::string> row{fmt_double(x)};
        for (double w : pi.probs) row.push_back(fmt_double(w));
        csv.row(row);
    }
    std::cout << "wrote stationary.csv\n";
    return 0;
}

struct OdeArgs {
    double x0 = 1.0, T = 1.0, dt = 0.01;
};

int cmd_limit_ode(Run& run, const OdeArgs& a) {
    const AveragedFlow flow = limit_ode(run.spec, a.x0, a.T, a.dt);
    CsvWriter csv(run.out("limit_ode.csv").string(), run.manifest.hash(), {"t", "xbar"});
    for (std::size_t k = 0; k < flow.times.size(); ++k)
        csv.row({fmt_double(flow.times[k]), fmt_double(flow.xbar[k])});
    std::cout << "wrote limit_ode.csv\n";
    return 0;
}

struct PathArgs {
    double x_start = 1.0, x_end = 2.0, T = 1.0;
    int K = 20;
    double target = 2.0, weight = 1.0;
    double x0 = 1.0;
};

void write_path_csv(Run& run, const std::string& name, const PathDiscretization& path,
                    const ActionResult& res) {
    CsvWriter csv(run.out(name).string(), run.manifest.hash(), {"t", "gamma", "segment_action"});
    const auto times = path.times();
    for (std::size_t k = 0; k < path.nodes.size(); ++k)
        csv.row({fmt_double(times[k]), fmt_double(path.nodes[k]),
                 fmt_double(k == 0 ? 0.0 : res.per_segment[k - 1])});
}

int cmd_optimal_path(Run& run, const PathArgs& a) {
    auto [path, res] = minimize_action(run.spec, a.x_start, a.x_end, a.T, a.K);
    write_path_csv(run, "optimal_path.csv", path, res);
    std::cout << "action = " << fmt_double(res.action) << " (iterations " << res.iterations
              << ", " << (res.converged ? "converged" : "NOT converged") << ")\n";
    run.finish();
    return res.converged ? 0 : 2;
}

int cmd_nisio(Run& run, const PathArgs& a) {
    PathDiscretization path;
    ActionResult res;
    const double w = a.weight;
    const double target = a.target;
    const double value = nisio_value(
        run.spec, [w, target](double y) { return -w * (y - target) * (y - target); }, a.x0, a.T,
        a.K, &path, &res);
    write_path_csv(run, "nisio_path.csv", path, res);
    CsvWriter csv(run.out("nisio_value.csv").string(), run.manifest.hash(),
                  {"x0", "T", "K", "target", "weight", "value", "path_action"});
    csv.row({fmt_double(a.x0), fmt_double(a.T), std::to_string(a.K), fmt_double(a.target),
             fmt_double(a.weight), fmt_double(value), fmt_double(res.action)});
    std::cout << "nisio value = " << fmt_double(value) << "\n";
    run.finish();
    return res.converged ? 0 : 2;
}

struct VerifyArgs {
    std::string ladder = "100,1000,10000";
    double T = 1.0, dt = 0.01, x0 = 1.0;
    int k0 = 1, paths = 1000;
    double target = -1.0;  // <0: use the flow endpoint
    int K = 20;
    double delta = 0.1, displace = 0.5;
};

std::vector<long long> parse_ladder(const std::string& s) {
    std::vector<long long> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoll(tok));
    return out;
}

int cmd_verify_averaging(Run& run, const VerifyArgs& a) {
    const LdpReport rep = averaging_error_curve(run.spec, parse_ladder(a.ladder), a.T, a.dt, a.x0,
                                                a.k0, a.paths, run.manifest.seed);
    CsvWriter csv(run.out("averaging_report.csv").string(), run.manifest.hash(),
                  {"n", "estimate", "stderr", "analytic", "gap"});
    for (std::size_t i = 0; i < rep.n_ladder.size(); ++i)
        csv.row({std::to_string(rep.n_ladder[i]), fmt_double(rep.estimate[i]),
                 fmt_double(rep.stderr_[i]), fmt_double(rep.analytic),
                 fmt_double(rep.estimate[i] - rep.analytic)});
    std::cout << "sup-error trend: " << (rep.trend_ok ? "decreasing" : "NOT decreasing")
              << ", log-log slope = " << fmt_double(rep.loglog_slope) << "\n";
    return 0;
}

int cmd_verify_ldp(Run& run, const VerifyArgs& a) {
    const auto ladder = parse_ladder(a.ladder);
    const std::string hash = run.manifest.hash();

    // Log-Laplace transform against the variational semigroup value.
    const AveragedFlow flow = limit_ode(run.spec, a.x0, a.T, a.T / a.K);
    const double target = a.target > 0.0 ? a.target : flow.xbar.back();
    auto f_scalar = [target](double y) { return -(y - target) * (y - target); };
    auto f = [target](double x, int) { return -(x - target) * (x - target); };
    const double v_limit = nisio_value(run.spec, f_scalar, a.x0, a.T, a.K);
    {
        CsvWriter csv(run.out("log_laplace_report.csv").string(), hash,
                      {"n", "estimate", "stderr", "analytic", "gap"});
        for (long long n : ladder) {
            const LogLaplaceEstimate est =
                mc_log_laplace(run.spec, n, a.T, f, a.x0, a.k0, a.paths, run.manifest.seed);
            csv.row({std::to_string(n), fmt_double(est.value), fmt_double(est.stderr_),
                     fmt_double(v_limit), fmt_double(est.value - v_limit)});
        }
    }

    // Tube probabilities around a displaced minimum-action path. The leading
    // columns follow the common report layout; the estimate is the measured
    // rate -(1/n) log p_hat with its delta-method standard error.
    const double x_end = flow.xbar.back() + a.displace;
    auto [gamma, res] = minimize_action(run.spec, a.x0, x_end, a.T, a.K);
    {
        CsvWriter csv(run.out("tube_report.csv").string(), hash,
                      {"n", "estimate", "stderr", "analytic", "gap", "p_hat", "p_stderr", "ci_lo",
                       "ci_hi", "lower_bound"});
        for (long long n : ladder) {
            const TubeEstimate est =
                tube_probability(run.spec, n, gamma, a.delta, a.paths, run.manifest.seed, a.k0);
            const double rate_se =
                est.hits > 0 ? est.stderr_ / (est.p_hat * static_cast<double>(n)) : 0.0;
            csv.row({std::to_string(n), fmt_double(est.rate), fmt_double(rate_se),
                     fmt_double(res.action), fmt_double(est.rate - res.action),
                     fmt_double(est.p_hat), fmt_double(est.stderr_), fmt_double(est.ci_lo),
                     fmt_double(est.ci_hi), est.rate_is_lower_bound ? "1" : "0"});
        }
    }
    std::cout << "wrote log_laplace_report.csv and tube_report.csv (path action "
              << fmt_double(res.action) << ")\n";
    return 0;
}

struct DvArgs {
    double x_lo = 0.01, x_hi = 100.0;
    int x_count = 25;
    std::string pi;
};

int cmd_dv_check(Run& run, const DvArgs& a) {
    std::vector<double> custom;
    if (!a.pi.empty()) {
        std::stringstream ss(a.pi);
        std::string tok;
        while (std::getline(ss, tok, ',')) custom.push_back(std::stod(tok));
        if (static_cast<int>(custom.size()) != run.spec.n_regimes())
            throw std::invalid_argument("--pi needs one weight per regime");
    }
    std::vector<std::string> header{"x", "i_stationary"};
    if (!custom.empty()) header.push_back("i_custom");
    CsvWriter csv(run.out("dv_check.csv").string(), run.manifest.hash(), header);
    for (double x : logspace(std::max(a.x_lo, run.spec.x_min), a.x_hi, a.x_count)) {
        std::vector<std::string> row{fmt_double(x),
                                     fmt_double(dv_functional(run.spec, x, stationary(run.spec, x)))};
        if (!custom.empty()) {
            SimplexMeasure pi;
            pi.probs = custom;
            row.push_back(fmt_double(dv_functional(run.spec, x, pi)));
        }
        csv.row(row);
    }
    std::cout << "wrote dv_check.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CIR diffusions with fast Markov switching: simulation, averaged dynamics, and "
                 "large-deviation objects"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = std::getenv("CIRLD_OUT_DIR") ? std::getenv("CIRLD_OUT_DIR") : ".";
    std::uint64_t seed = 0;
    int threads = 0;
    bool allow_nonfeller = false;
    app.add_option("--config", config_path, "model config file")->required();
    app.add_option("--out-dir", out_dir, "output directory (env CIRLD_OUT_DIR)");
    app.add_option("--seed", seed, "base RNG seed");
    app.add_option("--threads", threads, "cap worker threads (0 = library default)");
    app.add_flag("--allow-nonfeller", allow_nonfeller,
                 "downgrade Feller-condition violations to warnings");

    auto* c_validate = app.add_subcommand("validate", "check the model invariants");

    SimArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "sample slow-fast trajectories");
    c_sim->add_option("--n", sim.n, "scaling parameter n");
    c_sim->add_option("--T", sim.T, "horizon");
    c_sim->add_option("--dt", sim.dt, "output grid step");
    c_sim->add_option("--x0", sim.x0, "initial slow state");
    c_sim->add_option("--k0", sim.k0, "initial regime (1-based)");
    c_sim->add_option("--paths", sim.paths, "ensemble size (1 writes the raw trajectory)");

    GridArgs grid;
    auto* c_hgrid = app.add_subcommand("hamiltonian-grid", "H, dH/dx, dH/dp on an (x,p) grid");
    auto add_x = [&](CLI::App* c) {
        c->add_option("--x-min", grid.x_lo);
        c->add_option("--x-max", grid.x_hi);
        c->add_option("--x-count", grid.x_count);
    };
    add_x(c_hgrid);
    c_hgrid->add_option("--p-min", grid.p_lo);
    c_hgrid->add_option("--p-max", grid.p_hi);
    c_hgrid->add_option("--p-count", grid.p_count);

    auto* c_lgrid = app.add_subcommand("lagrangian-grid", "L and p* on an (x,v) grid");
    add_x(c_lgrid);
    c_lgrid->add_option("--v-min", grid.v_lo);
    c_lgrid->add_option("--v-max", grid.v_hi);
    c_lgrid->add_option("--v-count", grid.v_count);

    auto* c_stat = app.add_subcommand("stationary", "stationary law of the frozen chain");
    add_x(c_stat);

    OdeArgs ode;
    auto* c_ode = app.add_subcommand("limit-ode", "integrate the averaged dynamics");
    c_ode->add_option("--x0", ode.x0);
    c_ode->add_option("--T", ode.T);
    c_ode->add_option("--dt", ode.dt);

    PathArgs patha;
    auto* c_path = app.add_subcommand("optimal-path", "fixed-endpoint minimum-action path");
    c_path->add_option("--x-start", patha.x_start);
    c_path->add_option("--x-end", patha.x_end);
    c_path->add_option("--T", patha.T);
    c_path->add_option("--K", patha.K);

    auto* c_nisio = app.add_subcommand("nisio", "variational semigroup value for a quadratic "
                                                "terminal reward -w*(y-target)^2");
    c_nisio->add_option("--x0", patha.x0);
    c_nisio->add_option("--T", patha.T);
    c_nisio->add_option("--K", patha.K);
    c_nisio->add_option("--target", patha.target);
    c_nisio->add_option("--weight", patha.weight);

    VerifyArgs ver_avg;
    auto* c_vavg = app.add_subcommand("verify-averaging", "sup-error vs the averaged flow over an "
                                                          "n-ladder");
    c_vavg->add_option("--n-ladder", ver_avg.ladder);
    c_vavg->add_option("--T", ver_avg.T);
    c_vavg->add_option("--dt", ver_avg.dt);
    c_vavg->add_option("--x0", ver_avg.x0);
    c_vavg->add_option("--k0", ver_avg.k0);
    c_vavg->add_option("--paths", ver_avg.paths);

    VerifyArgs ver_ldp;
    ver_ldp.ladder = "50,100,200,400";
    ver_ldp.displace = 0.3;
    ver_ldp.delta = 0.15;
    auto* c_vldp = app.add_subcommand("verify-ldp", "log-Laplace and tube-probability ladders");
    c_vldp->add_option("--n-ladder", ver_ldp.ladder);
    c_vldp->add_option("--T", ver_ldp.T);
    c_vldp->add_option("--x0", ver_ldp.x0);
    c_vldp->add_option("--k0", ver_ldp.k0);
    c_vldp->add_option("--paths", ver_ldp.paths);
    c_vldp->add_option("--target", ver_ldp.target);
    c_vldp->add_option("--K", ver_ldp.K);
    c_vldp->add_option("--delta", ver_ldp.delta);
    c_vldp->add_option("--displace", ver_ldp.displace);

    DvArgs dv;
    auto* c_dv = app.add_subcommand("dv-check", "occupation-cost checks on an x grid");
    c_dv->add_option("--x-min", dv.x_lo);
    c_dv->add_option("--x-max", dv.x_hi);
    c_dv->add_option("--x-count", dv.x_count);
    c_dv->add_option("--pi", dv.pi, "comma-separated custom occupation measure");

    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    Run run;
    try {
        run.spec = load_config(config_path);
        run.spec.allow_nonfeller = allow_nonfeller;
        run.out_dir = out_dir;
        fs::create_directories(run.out_dir);

        std::ostringstream cmd;
        for (int i = 1; i < argc; ++i) cmd << (i > 1 ? " " : "") << argv[i];
        run.manifest.command = cmd.str();
        // Canonical form: drop flags that cannot change the numbers
        // (--out-dir, --threads) and the separately-hashed --config/--seed,
        // so reruns and different worker counts hash identically.
        std::ostringstream canon;
        bool first = true;
        for (int i = 1; i < argc; ++i) {
            const std::string tok = argv[i];
            if (tok == "--out-dir" || tok == "--threads" || tok == "--config" || tok == "--seed") {
                ++i;
                continue;
            }
            canon << (first ? "" : " ") << tok;
            first = false;
        }
        run.manifest.canonical_command = canon.str();
        run.manifest.config_path = config_path;
        {
            std::ifstream in(config_path, std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            run.manifest.config_bytes = ss.str();
        }
        run.manifest.seed = seed;
        run.manifest.started_utc = utc_now();

        if (c_validate->parsed()) return cmd_validate(run);

        // Every other command requires a valid model.
        const ValidationReport rep = validate(run.spec);
        for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
        if (!rep.ok()) {
            for (const auto& e : rep.errors) std::cerr << "error: " << e << "\n";
            return 1;
        }

        int rc = 0;
        if (c_sim->parsed()) rc = cmd_simulate(run, sim);
        else if (c_hgrid->parsed()) rc = cmd_hamiltonian_grid(run, grid);
        else if (c_lgrid->parsed()) rc = cmd_lagrangian_grid(run, grid);
        else if (c_stat->parsed()) rc = cmd_stationary(run, grid);
        else if (c_ode->parsed()) rc = cmd_limit_ode(run, ode);
        else if (c_path->parsed()) return cmd_optimal_path(run, patha);
        else if (c_nisio->parsed()) return cmd_nisio(run, patha);
        else if (c_vavg->parsed()) rc = cmd_verify_averaging(run, ver_avg);
        else if (c_vldp->parsed()) rc = cmd_verify_ldp(run, ver_ldp);
        else if (c_dv->parsed()) rc = cmd_dv_check(run, dv);
        run.finish();
        return rc;
    } catch (const ConvergenceError& e) {
        std::cerr << "numerical non-convergence: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
