#include "mfg/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace mfg {

RelaxedControl RelaxedControl::constant_pure(const TimeGrid& g, std::size_t nc,
                                             std::size_t index) {
    std::vector<double> data(static_cast<std::size_t>(g.steps) * nc, 0.0);
    for (int k = 0; k < g.steps; ++k) data[k * nc + index] = 1.0;
    return RelaxedControl(g, nc, std::move(data));
}

RelaxedControl RelaxedControl::pure_sequence(const TimeGrid& g, std::size_t nc,
                                             const std::vector<std::size_t>& indices) {
    if (static_cast<int>(indices.size()) != g.steps)
        throw std::invalid_argument("pure_sequence: one index per cell required");
    std::vector<double> data(static_cast<std::size_t>(g.steps) * nc, 0.0);
    for (int k = 0; k < g.steps; ++k) data[k * nc + indices[k]] = 1.0;
    return RelaxedControl(g, nc, std::move(data));
}

namespace {

// relaxed right-hand side at (t, x) with the cell's frozen statistics:
// dx = sum_u w_u f, dz = -sum_u w_u g
void relaxed_field(const Model& model, double t, std::span<const double> x,
                   std::span<const double> stats, std::span<const double> cell_w,
                   std::span<double> dx, double& dz, std::span<double> f_tmp) {
    int n = model.dim;
    for (int d = 0; d < n; ++d) dx[d] = 0.0;
    dz = 0.0;
    for (std::size_t u = 0; u < cell_w.size(); ++u) {
        double w = cell_w[u];
        if (w == 0.0) continue;
        model.drift(t, x, stats, model.control_set[u], f_tmp);
        for (int d = 0; d < n; ++d) dx[d] += w * f_tmp[d];
        dz -= w * model.running_cost(t, x, stats, model.control_set[u]);
    }
}

}  // namespace

Trajectory integrate_with_stats(const Model& model, const TimeGrid& grid,
                                const std::vector<std::vector<double>>& stats, int start_node,
                                std::span<const double> x0, const RelaxedControl& alpha) {
    if (!(alpha.grid == grid)) throw std::invalid_argument("integrate: control grid mismatch");
    if (alpha.n_controls != model.n_controls())
        throw std::invalid_argument("integrate: control set size mismatch");
    if (static_cast<int>(x0.size()) != model.dim)
        throw std::invalid_argument("integrate: x0 dimension mismatch");
    if (start_node < 0 || start_node > grid.steps)
        throw std::invalid_argument("integrate: start node out of range");

    const int n = model.dim;
    const double dt = grid.dt();
    Trajectory traj;
    traj.grid = grid;
    traj.dim = n;
    traj.states.assign(static_cast<std::size_t>(grid.nodes()) * n, 0.0);
    traj.cost.assign(grid.nodes(), 0.0);
    for (int k = 0; k <= start_node; ++k)
        for (int d = 0; d < n; ++d) traj.states[static_cast<std::size_t>(k) * n + d] = x0[d];

    // frozen-G exit check, when bounds are known
    const Box* allowed = nullptr;
    Box allowed_box;
    if (model.bounds) {
        allowed_box = model.bounds->G.inflated(1.25).expanded(1e-9);
        allowed = &allowed_box;
    }

    Vec x(x0.begin(), x0.end());
    double z = 0.0;
    Vec k1(n), k2(n), k3(n), k4(n), xs(n), f_tmp(n);
    double z1, z2, z3, z4;
    for (int k = start_node; k < grid.steps; ++k) {
        const auto& st = stats[k];  // flow snapshot frozen at the cell's left node
        auto cw = alpha.cell(k);
        double t = grid.node(k);

        relaxed_field(model, t, x, st, cw, k1, z1, f_tmp);
        for (int d = 0; d < n; ++d) xs[d] = x[d] + 0.5 * dt * k1[d];
        relaxed_field(model, t + 0.5 * dt, xs, st, cw, k2, z2, f_tmp);
        for (int d = 0; d < n; ++d) xs[d] = x[d] + 0.5 * dt * k2[d];
        relaxed_field(model, t + 0.5 * dt, xs, st, cw, k3, z3, f_tmp);
        for (int d = 0; d < n; ++d) xs[d] = x[d] + dt * k3[d];
        relaxed_field(model, t + dt, xs, st, cw, k4, z4, f_tmp);

        for (int d = 0; d < n; ++d)
            x[d] += dt / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        z += dt / 6.0 * (z1 + 2.0 * z2 + 2.0 * z3 + z4);

        if (allowed && !allowed->contains(x))
            throw std::runtime_error("invariant box violated");

        for (int d = 0; d < n; ++d) traj.states[static_cast<std::size_t>(k + 1) * n + d] = x[d];
        traj.cost[k + 1] = z;
    }
    return traj;
}

Trajectory integrate(const Model& model, const MeasureFlow& mu, int start_node,
                     std::span<const double> x0, const RelaxedControl& alpha) {
    if (!(mu.grid == alpha.grid)) throw std::invalid_argument("integrate: flow grid mismatch");
    return integrate_with_stats(model, mu.grid, flow_stats(model, mu), start_node, x0, alpha);
}

double payoff_of_trajectory(const Model& model, const std::vector<std::vector<double>>& stats,
                            const Trajectory& traj) {
    return model.terminal_value(traj.terminal_state(), stats[traj.grid.steps]) +
           traj.cost[traj.grid.steps];
}

double payoff(const Model& model, const MeasureFlow& mu, int start_node,
              std::span<const double> x0, const RelaxedControl& alpha) {
    auto stats = flow_stats(model, mu);
    Trajectory traj = integrate_with_stats(model, mu.grid, stats, start_node, x0, alpha);
    return payoff_of_trajectory(model, stats, traj);
}

double control_distance(const RelaxedControl& a, const RelaxedControl& b,
                        const std::vector<Vec>& control_set) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("control_distance: grid mismatch");
    if (a.n_controls != b.n_controls || a.n_controls != control_set.size())
        throw std::invalid_argument("control_distance: control set mismatch");
    int cdim = static_cast<int>(control_set.front().size());
    std::vector<double> pts;
    pts.reserve(control_set.size() * cdim);
    for (const Vec& u : control_set) pts.insert(pts.end(), u.begin(), u.end());

    double total = 0.0;
    double dt = a.grid.dt();
    for (int k = 0; k < a.grid.steps; ++k) {
        auto wa = a.cell(k), wb = b.cell(k);
        bool equal = true;
        for (std::size_t u = 0; u < a.n_controls; ++u)
            if (wa[u] != wb[u]) {
                equal = false;
                break;
            }
        if (equal) continue;
        ParticleMeasure ma(cdim, pts, std::vector<double>(wa.begin(), wa.end()));
        ParticleMeasure mb(cdim, pts, std::vector<double>(wb.begin(), wb.end()));
        total += dt * w1_distance(ma, mb);
    }
    return total;
}

}  // namespace mfg
