#include "cirld/action.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cirld/lagrangian.hpp"

namespace cirld {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::vector<double> PathDiscretization::times() const {
    const int K = segments();
    std::vector<double> t(K + 1);
    for (int k = 0; k <= K; ++k) t[k] = T * k / K;
    return t;
}

namespace {

void check_path(const ModelSpec& spec, const PathDiscretization& path) {
    if (path.nodes.size() < 2 || !(path.T > 0.0))
        throw std::invalid_argument("path needs T > 0 and at least two nodes");
    for (double v : path.nodes)
        if (!(v >= spec.x_min)) throw std::invalid_argument("path node below x_min");
}

// Cost of one segment, optionally warm-started; hint is updated in place so
// repeated solves along an optimization stay cheap.
double segment_cost(const ModelSpec& spec, double dt, double xl, double xr, double* hint) {
    const double xm = 0.5 * (xl + xr);
    const double v = (xr - xl) / dt;
    LegendreEval le = (hint != nullptr && std::isfinite(*hint))
                          ? legendre(spec, xm, v, *hint)
                          : legendre(spec, xm, v);
    if (le.unreachable) return kInf;
    if (hint) *hint = le.p_star;
    return dt * le.value;
}

// Shared objective for the fixed- and free-endpoint problems. Interior nodes
// (and the last node when the endpoint is free) are the free coordinates.
class PathProblem {
public:
    PathProblem(const ModelSpec& spec, double T, int K, bool free_end,
                const std::function<double(double)>* terminal)
        : spec_(spec), T_(T), K_(K), free_end_(free_end), terminal_(terminal),
          hints_(K, std::numeric_limits<double>::quiet_NaN()) {}

    double dt() const { return T_ / K_; }
    int n_free() const { return free_end_ ? K_ : K_ - 1; }
    int node_index(int free_idx) const { return free_idx + 1; }

    double full_cost(const std::vector<double>& nodes) {
        double total = 0.0;
        for (int k = 0; k < K_; ++k) {
            const double c = segment_cost(spec_, dt(), nodes[k], nodes[k + 1], &hints_[k]);
            if (!std::isfinite(c)) return kInf;
            total += c;
        }
        if (terminal_) total -= (*terminal_)(nodes[K_]);
        return total;
    }

    // Central differences; only the segments touching the perturbed node are
    // re-evaluated. Falls back to a forward difference against the x_min wall.
    void gradient(const std::vector<double>& nodes, double h, std::vector<double>& g) {
        g.assign(n_free(), 0.0);
        for (int fi = 0; fi < n_free(); ++fi) {
            const int k = node_index(fi);
            const bool lo_ok = nodes[k] - h >= spec_.x_min;
            const double hp = local_cost(nodes, k, nodes[k] + h);
            const double hm = lo_ok ? local_cost(nodes, k, nodes[k] - h)
                                    : local_cost(nodes, k, nodes[k]);
            g[fi] = (hp - hm) / (lo_ok ? 2.0 * h : h);
        }
    }

private:
    double local_cost(const std::vector<double>& nodes, int k, double value) {
        double total = 0.0;
        double hint_l = hints_[k - 1];
        total += segment_cost(spec_, dt(), nodes[k - 1], value, &hint_l);
        if (k < K_) {
            double hint_r = hints_[k];
            total += segment_cost(spec_, dt(), value, nodes[k + 1], &hint_r);
        }
        if (terminal_ && k == K_) total -= (*terminal_)(value);
        return total;
    }

    const ModelSpec& spec_;
    double T_;
    int K_;
    bool free_end_;
    const std::function<double(double)>* terminal_;
    std::vector<double> hints_;
};

struct LbfgsMemory {
    std::vector<std::vector<double>> s, y;
    std::vector<double> rho;

    void push(std::vector<double> si, std::vector<double> yi) {
        double sy = 0.0, ss = 0.0, yy = 0.0;
        for (std::size_t i = 0; i < si.size(); ++i) {
            sy += si[i] * yi[i];
            ss += si[i] * si[i];
            yy += yi[i] * yi[i];
        }
        if (sy <= 1e-12 * std::sqrt(ss * yy)) return;
        s.push_back(std::move(si));
        y.push_back(std::move(yi));
        rho.push_back(1.0 / sy);
        if (s.size() > 8) {
            s.erase(s.begin());
            y.erase(y.begin());
            rho.erase(rho.begin());
        }
    }

    void direction(const std::vector<double>& g, std::vector<double>& d) const {
        d = g;
        const int m = static_cast<int>(s.size());
        std::vector<double> alpha(m);
        for (int i = m - 1; i >= 0; --i) {
            double sd = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) sd += s[i][j] * d[j];
            alpha[i] = rho[i] * sd;
            for (std::size_t j = 0; j < d.size(); ++j) d[j] -= alpha[i] * y[i][j];
        }
        if (m > 0) {
            double yy = 0.0, sy = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) {
                yy += y[m - 1][j] * y[m - 1][j];
                sy += s[m - 1][j] * y[m - 1][j];
            }
            const double scale = sy / yy;
            for (double& v : d) v *= scale;
        }
        for (int i = 0; i < m; ++i) {
            double yd = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) yd += y[i][j] * d[j];
            const double beta = rho[i] * yd;
            for (std::size_t j = 0; j < d.size(); ++j) d[j] += (alpha[i] - beta) * s[i][j];
        }
        for (double& v : d) v = -v;
    }
};

std::pair<PathDiscretization, ActionResult> optimize(const ModelSpec& spec, double x_start,
                                                     std::optional<double> x_end, double T, int K,
                                                     const std::optional<std::vector<double>>& init,
                                                     const std::function<double(double)>* terminal,
                                                     const MinimizeOptions& opts) {
    if (K < 2) throw std::invalid_argument("K must be >= 2");
    if (!(x_start >= spec.x_min)) throw std::invalid_argument("x_start below x_min");
    if (x_end && !(*x_end >= spec.x_min)) throw std::invalid_argument("x_end below x_min");

    PathDiscretization path;
    path.T = T;
    if (init) {
        if (static_cast<int>(init->size()) != K + 1)
            throw std::invalid_argument("init path must have K+1 nodes");
        path.nodes = *init;
    } else {
        const double tail = x_end ? *x_end : x_start;
        path.nodes.resize(K + 1);
        for (int k = 0; k <= K; ++k)
            path.nodes[k] = x_start + (tail - x_start) * k / K;
    }
    for (double& v : path.nodes) v = std::max(v, spec.x_min);
    path.nodes.front() = x_start;
    if (x_end) path.nodes.back() = *x_end;

    PathProblem prob(spec, T, K, !x_end.has_value(), terminal);
    const int nf = prob.n_free();

    auto pack = [&](const std::vector<double>& nodes, std::vector<double>& z) {
        z.resize(nf);
        for (int i = 0; i < nf; ++i) z[i] = nodes[prob.node_index(i)];
    };
    auto unpack = [&](const std::vector<double>& z, std::vector<double>& nodes) {
        for (int i = 0; i < nf; ++i)
            nodes[prob.node_index(i)] = std::max(z[i], spec.x_min);
    };

    std::vector<double> z, g, d, z_new, g_new, nodes = path.nodes;
    pack(nodes, z);
    double f = prob.full_cost(nodes);
    prob.gradient(nodes, opts.fd_step, g);

    auto projected_sup = [&](const std::vector<double>& zz, const std::vector<double>& gg) {
        double m = 0.0;
        for (int i = 0; i < nf; ++i) {
            const bool at_wall = zz[i] <= spec.x_min + 1e-15 && gg[i] > 0.0;
            if (!at_wall) m = std::max(m, std::fabs(gg[i]));
        }
        return m;
    };

    LbfgsMemory mem;
    ActionResult res;
    res.converged = false;
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        if (projected_sup(z, g) <= opts.grad_tol) {
            res.converged = true;
            break;
        }
        mem.direction(g, d);
        double dg = 0.0;
        for (int i = 0; i < nf; ++i) dg += d[i] * g[i];
        if (!(dg < 0.0)) {
            d = g;
            for (double& v : d) v = -v;
            dg = 0.0;
            for (int i = 0; i < nf; ++i) dg += d[i] * g[i];
        }

        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 50; ++bt) {
            z_new = z;
            for (int i = 0; i < nf; ++i) z_new[i] = std::max(z[i] + alpha * d[i], spec.x_min);
            unpack(z_new, nodes);
            const double f_new = prob.full_cost(nodes);
            double step_len = 0.0;
            for (int i = 0; i < nf; ++i) step_len += (z_new[i] - z[i]) * g[i];
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step_len) {
                prob.gradient(nodes, opts.fd_step, g_new);
                std::vector<double> s(nf), yv(nf);
                for (int i = 0; i < nf; ++i) {
                    s[i] = z_new[i] - z[i];
                    yv[i] = g_new[i] - g[i];
                }
                mem.push(std::move(s), std::move(yv));
                z = z_new;
                g = g_new;
                f = f_new;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;  // stalled at line-search resolution
    }

    unpack(z, path.nodes);
    ActionResult final_res = action(spec, path);
    final_res.converged = res.converged || projected_sup(z, g) <= opts.grad_tol;
    final_res.iterations = it;
    return {path, final_res};
}

}  // namespace

ActionResult action(const ModelSpec& spec, const PathDiscretization& path) {
    check_path(spec, path);
    const int K = path.segments();
    ActionResult res;
    res.per_segment.resize(K);
    res.action = 0.0;
    const double dt = path.dt();
    for (int k = 0; k < K; ++k) {
        const double c = segment_cost(spec, dt, path.nodes[k], path.nodes[k + 1], nullptr);
        res.per_segment[k] = c;
        res.action += c;
    }
    if (!std::isfinite(res.action)) res.action = kInf;
    return res;
}

std::pair<PathDiscretization, ActionResult> minimize_action(
    const ModelSpec& spec, double x_start, double x_end, double T, int K,
    const std::optional<std::vector<double>>& init, const MinimizeOptions& opts) {
    return optimize(spec, x_start, x_end, T, K, init, nullptr, opts);
}

double nisio_value(const ModelSpec& spec, const std::function<double(double)>& f, double x0,
                   double T, int K, PathDiscretization* path_out, ActionResult* result_out,
                   const MinimizeOptions& opts) {
    auto [path, res] = optimize(spec, x0, std::nullopt, T, K, std::nullopt, &f, opts);
    if (path_out) *path_out = path;
    if (result_out) *result_out = res;
    return f(path.nodes.back()) - res.action;
}

}  // namespace cirld
