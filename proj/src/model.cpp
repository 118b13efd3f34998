#include "mfg/model.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "mfg/simplex_lp.hpp"

namespace mfg {

std::vector<std::vector<double>> flow_stats(const Model& model, const MeasureFlow& mu) {
    std::vector<std::vector<double>> stats(mu.grid.nodes());
    for (int k = 0; k < mu.grid.nodes(); ++k)
        stats[k] = model.eval_stats(mu.grid.node(k), mu.snapshots[k]);
    return stats;
}

HamiltonianEval hamiltonian_with_stats(const Model& model, double t, std::span<const double> x,
                                       std::span<const double> stats,
                                       std::span<const double> p) {
    if (static_cast<int>(x.size()) != model.dim || static_cast<int>(p.size()) != model.dim)
        throw std::invalid_argument("hamiltonian: x/p dimension mismatch");
    HamiltonianEval eval;
    eval.value = -std::numeric_limits<double>::infinity();
    Vec f(model.dim);
    for (std::size_t ui = 0; ui < model.control_set.size(); ++ui) {
        const Vec& u = model.control_set[ui];
        model.drift(t, x, stats, u, f);
        double g = model.running_cost(t, x, stats, u);
        double v = -g;
        for (int d = 0; d < model.dim; ++d) v += p[d] * f[d];
        if (!std::isfinite(v))
            throw std::runtime_error("hamiltonian: non-finite f or g at control index " +
                                     std::to_string(ui));
        if (v > eval.value) {
            eval.value = v;
            eval.argmax_controls.clear();
            eval.argmax_controls.push_back(ui);
        } else if (v == eval.value) {
            eval.argmax_controls.push_back(ui);
        }
    }
    return eval;
}

HamiltonianEval hamiltonian(const Model& model, double t, std::span<const double> x,
                            const ParticleMeasure& m, std::span<const double> p) {
    auto stats = model.eval_stats(t, m);
    return hamiltonian_with_stats(model, t, x, stats, p);
}

double conjugate_with_stats(const Model& model, double t, std::span<const double> x,
                            std::span<const double> stats, std::span<const double> xi) {
    if (static_cast<int>(xi.size()) != model.dim)
        throw std::invalid_argument("conjugate: xi dimension mismatch");
    // min sum(lambda_u g_u)  s.t.  sum(lambda_u f_u) = xi, sum(lambda) = 1
    int n = model.dim;
    int cols = static_cast<int>(model.control_set.size());
    int rows = n + 1;
    std::vector<double> A(static_cast<std::size_t>(rows) * cols), b(rows), c(cols);
    Vec f(n);
    for (int j = 0; j < cols; ++j) {
        model.drift(t, x, stats, model.control_set[j], f);
        for (int d = 0; d < n; ++d) A[d * cols + j] = f[d];
        A[n * cols + j] = 1.0;
        c[j] = model.running_cost(t, x, stats, model.control_set[j]);
    }
    for (int d = 0; d < n; ++d) b[d] = xi[d];
    b[n] = 1.0;
    LpResult res = solve_lp(A, b, c, rows, cols);
    if (res.status == LpResult::Status::Infeasible)
        return std::numeric_limits<double>::infinity();
    return res.value;
}

double conjugate(const Model& model, double t, std::span<const double> x,
                 const ParticleMeasure& m, std::span<const double> xi) {
    auto stats = model.eval_stats(t, m);
    return conjugate_with_stats(model, t, x, stats, xi);
}

namespace {

// deterministic lattice of sample points on a box face / interior
void face_lattice(const Box& box, int fixed_axis, double fixed_val, int per_axis,
                  std::vector<Vec>& out) {
    int n = box.dim();
    std::vector<int> idx(n, 0);
    while (true) {
        Vec x(n);
        for (int d = 0; d < n; ++d) {
            if (d == fixed_axis)
                x[d] = fixed_val;
            else
                x[d] = per_axis == 1 ? 0.5 * (box.lo[d] + box.hi[d])
                                     : box.lo[d] + (box.hi[d] - box.lo[d]) * idx[d] /
                                           (per_axis - 1);
        }
        out.push_back(std::move(x));
        int d = 0;
        for (; d < n; ++d) {
            if (d == fixed_axis) continue;
            if (++idx[d] < per_axis) break;
            idx[d] = 0;
        }
        if (d == n) break;
    }
}

// a small deterministic family of probe measures covering the box
std::vector<ParticleMeasure> probe_measures(const Model& model, const Box& box) {
    std::vector<ParticleMeasure> probes;
    probes.push_back(model.m0);
    int n = box.dim();
    Vec center(n);
    for (int d = 0; d < n; ++d) center[d] = 0.5 * (box.lo[d] + box.hi[d]);
    probes.push_back(ParticleMeasure::dirac(center));
    // uniform over the corners
    std::size_t corners = 1ull << n;
    std::vector<double> pts;
    for (std::size_t c = 0; c < corners; ++c)
        for (int d = 0; d < n; ++d)
            pts.push_back((c >> d) & 1 ? box.hi[d] : box.lo[d]);
    probes.push_back(ParticleMeasure(
        n, std::move(pts), std::vector<double>(corners, 1.0 / static_cast<double>(corners))));
    return probes;
}

}  // namespace

DomainBounds bound_box_and_K(const Model& model, const TimeGrid& grid, double safety_factor) {
    model.validate();
    int n = model.dim;
    Box box = model.m0.bounding_box();
    double dt = grid.dt();
    const int face_pts = n == 1 ? 1 : 7;
    const std::vector<double> t_samples = {0.0, 0.5 * grid.T, grid.T};

    double box_limit = 0.0;
    for (int d = 0; d < n; ++d)
        box_limit = std::max(box_limit, std::abs(box.lo[d]) + std::abs(box.hi[d]));
    box_limit = 1e6 * (box_limit + 1.0);

    // expand each face by dt * (max outward speed on the face); an invariant
    // box stops growing, superlinear dynamics trip the limit
    for (int step = 0; step < grid.steps; ++step) {
        auto probes = probe_measures(model, box);
        Vec f(n);
        Box next = box;
        for (int d = 0; d < n; ++d) {
            for (int side = 0; side < 2; ++side) {
                double fixed = side ? box.hi[d] : box.lo[d];
                std::vector<Vec> face;
                face_lattice(box, d, fixed, face_pts, face);
                double out_speed = 0.0;
                for (const Vec& x : face)
                    for (const auto& m : probes) {
                        auto stats = model.eval_stats(grid.node(step), m);
                        for (const Vec& u : model.control_set)
                            for (double t : t_samples) {
                                model.drift(t, x, stats, u, f);
                                double v = side ? f[d] : -f[d];
                                out_speed = std::max(out_speed, v);
                            }
                    }
                if (side)
                    next.hi[d] += dt * out_speed;
                else
                    next.lo[d] -= dt * out_speed;
                if (next.hi[d] - next.lo[d] > box_limit)
                    throw std::runtime_error("invariant box not found");
            }
        }
        box = next;
    }

    DomainBounds bounds;
    bounds.G = box.inflated(safety_factor);

    // sampled sup of ||f|| over the inflated box
    double K = 0.0;
    auto probes = probe_measures(model, bounds.G);
    Vec f(n);
    std::vector<Vec> pts;
    for (int d = 0; d < n; ++d) {
        face_lattice(bounds.G, d, bounds.G.lo[d], face_pts, pts);
        face_lattice(bounds.G, d, bounds.G.hi[d], face_pts, pts);
        face_lattice(bounds.G, d, 0.5 * (bounds.G.lo[d] + bounds.G.hi[d]), face_pts, pts);
    }
    // interior lattice along the diagonal axes too
    const int interior = 9;
    for (int i = 0; i < interior; ++i) {
        Vec x(n);
        for (int d = 0; d < n; ++d)
            x[d] = bounds.G.lo[d] + (bounds.G.hi[d] - bounds.G.lo[d]) * i / (interior - 1);
        pts.push_back(std::move(x));
    }
    for (const Vec& x : pts)
        for (const auto& m : probes)
            for (double t : t_samples) {
                auto stats = model.eval_stats(t, m);
                for (const Vec& u : model.control_set) {
                    model.drift(t, x, stats, u, f);
                    K = std::max(K, norm(f));
                }
            }
    bounds.K = K * safety_factor;
    return bounds;
}

std::map<std::string, double> constant_ledger(const Model& model) {
    if (!model.bounds) throw std::runtime_error("constant_ledger: bounds (G, K) not computed");
    const LipschitzLedger& L = model.lipschitz;
    double T = model.horizon;
    double diamG = model.bounds->G.diameter();

    std::map<std::string, double> c;
    double C1 = std::exp(L.L_fx * T) * L.L_fm;
    double C2 = std::exp(L.L_fx * T);
    double C3 = C2 * std::exp(C1 * T);
    double C4 = diamG * std::exp(C1 * T);
    double C5 = C1 * C3 * T;
    double C6 = L.L_gx * C2 * T;
    double C7 = T * T * C1 * C3 * (L.L_gx + L.L_gm);
    double C8 = L.L_gm * C4 * T + C1 * C4 * T * T * L.L_gx;
    c["C1"] = C1;
    c["C2"] = C2;
    c["C3"] = C3;
    c["C4"] = C4;
    c["C5"] = C5;
    c["C6"] = C6;
    c["C7"] = C7;
    c["C8"] = C8;
    c["diamG"] = diamG;
    c["K"] = model.bounds->K;
    // hat constants as they appear in the final display of the deviation
    // estimate: Chat1 multiplies W(m0, delta^N), Chat2 multiplies
    // N max_i int ||x - x_i|| dm_i, Chat3 multiplies 1/N
    c["Chat1"] = 2.0 * (L.L_sx * C5 + L.L_sm * C3 + C7);
    c["Chat2"] = 2.0 * (L.L_sx * C2 + C6);
    c["Chat3"] = L.L_sx * C1 * C4 * T + L.L_sm * C4 + C8;
    return c;
}

LedgerConsistency ledger_consistency(const Model& model, int samples, unsigned long long seed) {
    if (!model.bounds) throw std::runtime_error("ledger_consistency: bounds not computed");
    const Box& G = model.bounds->G;
    int n = model.dim;
    std::mt19937_64 rng(seed);
    auto unif = [&rng](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    auto rand_point = [&] {
        Vec x(n);
        for (int d = 0; d < n; ++d) x[d] = unif(G.lo[d], G.hi[d]);
        return x;
    };
    auto rand_measure = [&] {
        int k = 1 + static_cast<int>(rng() % 8);
        std::vector<double> pts, ws;
        for (int i = 0; i < k; ++i) {
            Vec x = rand_point();
            pts.insert(pts.end(), x.begin(), x.end());
            ws.push_back(1.0);
        }
        for (double& w : ws) w /= k;
        return ParticleMeasure(n, std::move(pts), std::move(ws));
    };

    LedgerConsistency out;
    auto track = [&out](const std::string& key, double observed, double declared) {
        double r = observed / std::max(declared, 1e-300);
        auto it = out.ratio.find(key);
        if (it == out.ratio.end())
            out.ratio[key] = r;
        else
            it->second = std::max(it->second, r);
    };

    Vec f1(n), f2(n);
    for (int s = 0; s < samples; ++s) {
        double t = unif(0.0, model.horizon);
        Vec x1 = rand_point(), x2 = rand_point();
        ParticleMeasure ma = rand_measure(), mb = rand_measure();
        const Vec& u = model.control_set[rng() % model.control_set.size()];
        auto sa = model.eval_stats(t, ma);
        auto sb = model.eval_stats(t, mb);
        double dx = dist(x1, x2);
        double dm = w1_distance(ma, mb);

        if (dx > 1e-12) {
            model.drift(t, x1, sa, u, f1);
            model.drift(t, x2, sa, u, f2);
            double df = dist(f1, f2);
            track("L_fx", df, model.lipschitz.L_fx * dx);
            double dg = std::abs(model.running_cost(t, x1, sa, u) -
                                 model.running_cost(t, x2, sa, u));
            track("L_gx", dg, model.lipschitz.L_gx * dx);
            double dsig =
                std::abs(model.terminal_value(x1, sa) - model.terminal_value(x2, sa));
            track("L_sx", dsig, model.lipschitz.L_sx * dx);
        }
        if (dm > 1e-12) {
            model.drift(t, x1, sa, u, f1);
            model.drift(t, x1, sb, u, f2);
            track("L_fm", dist(f1, f2), model.lipschitz.L_fm * dm);
            double dg = std::abs(model.running_cost(t, x1, sa, u) -
                                 model.running_cost(t, x1, sb, u));
            track("L_gm", dg, model.lipschitz.L_gm * dm);
            double dsig =
                std::abs(model.terminal_value(x1, sa) - model.terminal_value(x1, sb));
            track("L_sm", dsig, model.lipschitz.L_sm * dm);
        }
    }
    return out;
}

}  // namespace mfg
