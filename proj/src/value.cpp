#include "mfg/value.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfg {

namespace {

// relative tolerance for treating one-step objectives as tied; absorbs
// interpolation rounding so symmetric problems break ties reproducibly
constexpr double kTieEps = 1e-12;

double extrapolation_margin(const Model& model, double dt) {
    if (!model.bounds) return std::numeric_limits<double>::infinity();
    return model.bounds->K * dt * 1.05 + 1e-12;
}

}  // namespace

double ValueField::interpolate(double t, std::span<const double> x, double max_out) const {
    double s = t / tgrid_.dt();
    int k = static_cast<int>(std::floor(s));
    k = std::max(0, std::min(k, tgrid_.steps - 1));
    double frac = s - k;
    double v0 = sgrid_.interpolate(values_[k], x, max_out);
    double v1 = sgrid_.interpolate(values_[k + 1], x, max_out);
    return v0 + frac * (v1 - v0);
}

StateGrid default_state_grid(const Model& model, int nodes_per_axis) {
    if (!model.bounds) throw std::runtime_error("default_state_grid: model bounds not computed");
    return StateGrid(model.bounds->G.inflated(1.1),
                     std::vector<int>(model.dim, nodes_per_axis));
}

ValueField solve_value(const Model& model, const MeasureFlow& mu, const StateGrid& sgrid,
                       bool parallel) {
    model.validate();
    if (mu.dim() != model.dim) throw std::invalid_argument("solve_value: flow dimension mismatch");
    if (sgrid.dim() != model.dim)
        throw std::invalid_argument("solve_value: state grid dimension mismatch");
    if (model.dim > 3)
        throw std::invalid_argument("solve_value: state dimensions above 3 are not supported");

    const TimeGrid& tg = mu.grid;
    const double dt = tg.dt();
    const double max_out = extrapolation_margin(model, dt);
    const std::size_t n_nodes = sgrid.total_nodes();
    const std::size_t nc = model.n_controls();
    auto stats = flow_stats(model, mu);

    ValueField vf(tg, sgrid);

    // terminal condition, exact at nodes
    {
        auto& slice = vf.slice(tg.steps);
        const auto& st = stats[tg.steps];
#pragma omp parallel for schedule(static) if (parallel)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_nodes); ++i) {
            Vec x(model.dim);
            sgrid.node_coords(i, x);
            slice[i] = model.terminal_value(x, st);
        }
    }

    for (int k = tg.steps - 1; k >= 0; --k) {
        const auto& st = stats[k];
        const auto& next = vf.slice(k + 1);
        auto& cur = vf.slice(k);
        const double t = tg.node(k);

        std::vector<std::vector<std::uint16_t>> ties(n_nodes);
#pragma omp parallel for schedule(static) if (parallel)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_nodes); ++i) {
            Vec x(model.dim), f(model.dim), foot(model.dim);
            std::vector<double> vals(nc);
            sgrid.node_coords(i, x);
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t u = 0; u < nc; ++u) {
                model.drift(t, x, st, model.control_set[u], f);
                for (int d = 0; d < model.dim; ++d) foot[d] = x[d] + dt * f[d];
                double v = -dt * model.running_cost(t, x, st, model.control_set[u]) +
                           sgrid.interpolate(next, foot, max_out);
                if (!std::isfinite(v))
                    throw std::runtime_error("solve_value: non-finite objective at control " +
                                             std::to_string(u));
                vals[u] = v;
                if (v > best) best = v;
            }
            cur[i] = best;
            double eps = kTieEps * (1.0 + std::abs(best));
            auto& tie = ties[i];
            for (std::size_t u = 0; u < nc; ++u)
                if (vals[u] >= best - eps) tie.push_back(static_cast<std::uint16_t>(u));
        }

        auto& offsets = vf.argmax_offsets()[k];
        auto& data = vf.argmax_data()[k];
        offsets.assign(n_nodes + 1, 0);
        for (std::size_t i = 0; i < n_nodes; ++i)
            offsets[i + 1] = offsets[i] + static_cast<std::uint32_t>(ties[i].size());
        data.resize(offsets.back());
        for (std::size_t i = 0; i < n_nodes; ++i)
            std::copy(ties[i].begin(), ties[i].end(), data.begin() + offsets[i]);
    }
    return vf;
}

namespace {

// one-step objectives at an arbitrary state; shared by the extraction walks
void one_step_values(const Model& model, const ValueField& vf,
                     const std::vector<double>& next_slice, double t, double dt,
                     std::span<const double> x, std::span<const double> st, double max_out,
                     std::vector<double>& vals) {
    Vec f(model.dim), foot(model.dim);
    for (std::size_t u = 0; u < model.n_controls(); ++u) {
        model.drift(t, x, st, model.control_set[u], f);
        for (int d = 0; d < model.dim; ++d) foot[d] = x[d] + dt * f[d];
        vals[u] = -dt * model.running_cost(t, x, st, model.control_set[u]) +
                  vf.sgrid().interpolate(next_slice, foot, max_out);
    }
}

}  // namespace

RelaxedControl best_response_with_stats(const Model& model,
                                        const std::vector<std::vector<double>>& stats,
                                        const ValueField& vf, std::span<const double> x0) {
    const TimeGrid& tg = vf.tgrid();
    const double dt = tg.dt();
    const double max_out = extrapolation_margin(model, dt);

    std::vector<std::size_t> picks(tg.steps);
    Vec x(x0.begin(), x0.end()), f(model.dim);
    std::vector<double> vals(model.n_controls());
    for (int k = 0; k < tg.steps; ++k) {
        one_step_values(model, vf, vf.slice(k + 1), tg.node(k), dt, x, stats[k], max_out, vals);
        double best = *std::max_element(vals.begin(), vals.end());
        double eps = kTieEps * (1.0 + std::abs(best));
        std::size_t pick = 0;
        for (std::size_t u = 0; u < vals.size(); ++u)
            if (vals[u] >= best - eps) {
                pick = u;
                break;
            }
        picks[k] = pick;
        model.drift(tg.node(k), x, stats[k], model.control_set[pick], f);
        for (int d = 0; d < model.dim; ++d) x[d] += dt * f[d];
    }
    return RelaxedControl::pure_sequence(tg, model.n_controls(), picks);
}

RelaxedControl best_response(const Model& model, const MeasureFlow& mu, const ValueField& vf,
                             std::span<const double> x0) {
    return best_response_with_stats(model, flow_stats(model, mu), vf, x0);
}

std::vector<RelaxedControl> best_response_split_with_stats(
    const Model& model, const std::vector<std::vector<double>>& stats, const ValueField& vf,
    std::span<const double> x0, std::size_t max_branches) {
    const TimeGrid& tg = vf.tgrid();
    const double dt = tg.dt();
    const double max_out = extrapolation_margin(model, dt);

    struct Branch {
        Vec x;
        std::vector<std::size_t> picks;
    };
    std::vector<Branch> branches{{Vec(x0.begin(), x0.end()), {}}};
    std::vector<double> vals(model.n_controls());
    Vec f(model.dim);
    for (int k = 0; k < tg.steps; ++k) {
        std::vector<Branch> next;
        for (const auto& br : branches) {
            one_step_values(model, vf, vf.slice(k + 1), tg.node(k), dt, br.x, stats[k], max_out,
                            vals);
            double best = *std::max_element(vals.begin(), vals.end());
            double eps = kTieEps * (1.0 + std::abs(best));
            bool first = true;
            for (std::size_t u = 0; u < vals.size(); ++u) {
                if (vals[u] < best - eps) continue;
                // the lowest-index continuation always survives; extra tie
                // branches only while the budget allows
                if (!first && next.size() >= max_branches) break;
                first = false;
                Branch nb;
                nb.x = br.x;
                model.drift(tg.node(k), nb.x, stats[k], model.control_set[u], f);
                for (int d = 0; d < model.dim; ++d) nb.x[d] += dt * f[d];
                nb.picks = br.picks;
                nb.picks.push_back(u);
                next.push_back(std::move(nb));
            }
        }
        branches = std::move(next);
    }
    std::vector<RelaxedControl> out;
    out.reserve(branches.size());
    for (const auto& br : branches)
        out.push_back(RelaxedControl::pure_sequence(tg, model.n_controls(), br.picks));
    return out;
}

std::vector<RelaxedControl> best_response_split(const Model& model, const MeasureFlow& mu,
                                                const ValueField& vf, std::span<const double> x0,
                                                std::size_t max_branches) {
    return best_response_split_with_stats(model, flow_stats(model, mu), vf, x0, max_branches);
}

ViabilityReport check_viability(const Model& model, const MeasureFlow& mu, const ValueField& vf,
                                const Trajectory& traj, double tol) {
    if (!(traj.grid == vf.tgrid()))
        throw std::invalid_argument("check_viability: trajectory grid mismatch");
    auto stats = flow_stats(model, mu);
    const double dt = traj.grid.dt();

    ViabilityReport rep;
    double v0 = vf.value_at(0, traj.state(0));
    for (int k = 0; k <= traj.grid.steps; ++k) {
        double v = vf.value_at(k, traj.state(k));
        rep.graph_defect = std::max(rep.graph_defect, std::abs(v - (v0 + traj.cost[k])));
    }
    Vec xdot(model.dim);
    for (int k = 0; k < traj.grid.steps; ++k) {
        auto xk = traj.state(k);
        auto xk1 = traj.state(k + 1);
        for (int d = 0; d < model.dim; ++d) xdot[d] = (xk1[d] - xk[d]) / dt;
        double zdot = (traj.cost[k + 1] - traj.cost[k]) / dt;
        double hstar = conjugate_with_stats(model, traj.grid.node(k), xk, stats[k], xdot);
        double defect;
        if (std::isfinite(hstar))
            defect = std::max(0.0, -(zdot + hstar));
        else
            defect = std::numeric_limits<double>::infinity();
        rep.inclusion_defect = std::max(rep.inclusion_defect, defect);
    }
    rep.pass = rep.graph_defect <= tol && rep.inclusion_defect <= tol;
    return rep;
}

HadamardReport check_hadamard(const Model& model, const MeasureFlow& mu, const ValueField& vf,
                              const std::vector<TimeStatePoint>& points,
                              const std::vector<double>& deltas) {
    if (deltas.size() < 2)
        throw std::invalid_argument("check_hadamard: need at least two deltas");
    for (std::size_t i = 1; i < deltas.size(); ++i)
        if (!(deltas[i] < deltas[i - 1]))
            throw std::invalid_argument("check_hadamard: deltas must decrease");
    auto stats = flow_stats(model, mu);
    const TimeGrid& tg = vf.tgrid();
    const std::size_t nc = model.n_controls();

    HadamardReport rep;
    rep.lower_worst = std::numeric_limits<double>::infinity();
    rep.upper_worst = -std::numeric_limits<double>::infinity();

    Vec f(model.dim), xi(model.dim), probe(model.dim);
    for (const auto& pt : points) {
        if (pt.t + deltas.back() > tg.T)
            throw std::invalid_argument("check_hadamard: sample point too close to horizon");
        int node = static_cast<int>(std::floor(pt.t / tg.dt() + 0.5));
        node = std::max(0, std::min(node, tg.steps));
        const auto& st = stats[node];
        double v_here = vf.interpolate(pt.t, pt.x);

        // quotient of V along direction xi for a given delta
        auto quotient = [&](std::span<const double> dir, double delta) {
            for (int d = 0; d < model.dim; ++d) probe[d] = pt.x[d] + delta * dir[d];
            return (vf.interpolate(pt.t + delta, probe) - v_here) / delta;
        };
        auto d_upper = [&](std::span<const double> dir) {
            double q = -std::numeric_limits<double>::infinity();
            for (std::size_t j = deltas.size() - 2; j < deltas.size(); ++j)
                if (pt.t + deltas[j] <= tg.T) q = std::max(q, quotient(dir, deltas[j]));
            return q;
        };
        auto d_lower = [&](std::span<const double> dir) {
            double q = std::numeric_limits<double>::infinity();
            for (std::size_t j = deltas.size() - 2; j < deltas.size(); ++j)
                if (pt.t + deltas[j] <= tg.T) q = std::min(q, quotient(dir, deltas[j]));
            return q;
        };

        // cache f and g per control at this point
        std::vector<Vec> fs(nc, Vec(model.dim));
        std::vector<double> gs(nc);
        for (std::size_t u = 0; u < nc; ++u) {
            model.drift(pt.t, pt.x, st, model.control_set[u], fs[u]);
            gs[u] = model.running_cost(pt.t, pt.x, st, model.control_set[u]);
        }

        // hypograph condition: sup over the characteristic hull of
        // d+V(t,x,1,xi) - zeta must be >= 0; vertices plus pair midpoints
        double lower_here = -std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < nc; ++u)
            lower_here = std::max(lower_here, d_upper(fs[u]) - gs[u]);
        for (std::size_t a = 0; a < nc; ++a)
            for (std::size_t b = a + 1; b < nc; ++b) {
                for (int d = 0; d < model.dim; ++d) xi[d] = 0.5 * (fs[a][d] + fs[b][d]);
                lower_here = std::max(lower_here, d_upper(xi) - 0.5 * (gs[a] + gs[b]));
            }
        rep.lower_worst = std::min(rep.lower_worst, lower_here);

        // epigraph condition: for every control, d-V(t,x,1,f(u)) - g(u) <= 0
        double upper_here = -std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < nc; ++u)
            upper_here = std::max(upper_here, d_lower(fs[u]) - gs[u]);
        rep.upper_worst = std::max(rep.upper_worst, upper_here);
    }
    rep.lower_violation = std::max(0.0, -rep.lower_worst);
    rep.upper_violation = std::max(0.0, rep.upper_worst);
    return rep;
}

namespace reference {

ValueField solve_value_ref(const Model& model, const MeasureFlow& mu, const StateGrid& sgrid) {
    const TimeGrid& tg = mu.grid;
    const double dt = tg.dt();
    const double max_out = extrapolation_margin(model, dt);
    ValueField vf(tg, sgrid);

    for (std::size_t i = 0; i < sgrid.total_nodes(); ++i) {
        Vec x(model.dim);
        sgrid.node_coords(i, x);
        auto st = model.eval_stats(tg.T, mu.snapshots[tg.steps]);
        vf.slice(tg.steps)[i] = model.terminal_value(x, st);
    }
    for (int k = tg.steps - 1; k >= 0; --k) {
        auto st = model.eval_stats(tg.node(k), mu.snapshots[k]);
        auto& offsets = vf.argmax_offsets()[k];
        auto& data = vf.argmax_data()[k];
        offsets.assign(sgrid.total_nodes() + 1, 0);
        for (std::size_t i = 0; i < sgrid.total_nodes(); ++i) {
            Vec x(model.dim), f(model.dim), foot(model.dim);
            sgrid.node_coords(i, x);
            std::vector<double> vals(model.n_controls());
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t u = 0; u < model.n_controls(); ++u) {
                model.drift(tg.node(k), x, st, model.control_set[u], f);
                for (int d = 0; d < model.dim; ++d) foot[d] = x[d] + dt * f[d];
                vals[u] = -dt * model.running_cost(tg.node(k), x, st, model.control_set[u]) +
                          sgrid.interpolate(vf.slice(k + 1), foot, max_out);
                best = std::max(best, vals[u]);
            }
            vf.slice(k)[i] = best;
            double eps = kTieEps * (1.0 + std::abs(best));
            for (std::size_t u = 0; u < model.n_controls(); ++u)
                if (vals[u] >= best - eps) data.push_back(static_cast<std::uint16_t>(u));
            offsets[i + 1] = static_cast<std::uint32_t>(data.size());
        }
    }
    return vf;
}

}  // namespace reference

}  // namespace mfg
