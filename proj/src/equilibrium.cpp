#include "mfg/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfg {

namespace {

// collect entry states at node k into a measure, merging bitwise-equal points
ParticleMeasure node_measure(const std::vector<BundleEntry>& entries, int k, int dim) {
    std::vector<double> pts, ws;
    pts.reserve(entries.size() * dim);
    ws.reserve(entries.size());
    for (const auto& e : entries) {
        auto x = e.trajectory.state(k);
        bool merged = false;
        for (std::size_t j = 0; j < ws.size(); ++j) {
            bool same = true;
            for (int d = 0; d < dim; ++d)
                if (pts[j * dim + d] != x[d]) {
                    same = false;
                    break;
                }
            if (same) {
                ws[j] += e.weight;
                merged = true;
                break;
            }
        }
        if (!merged) {
            pts.insert(pts.end(), x.begin(), x.end());
            ws.push_back(e.weight);
        }
    }
    return ParticleMeasure(dim, std::move(pts), std::move(ws));
}

}  // namespace

ParticleMeasure TrajectoryBundle::empirical(int k) const {
    if (entries.empty()) throw std::runtime_error("TrajectoryBundle: empty");
    return node_measure(entries, k, entries.front().trajectory.dim);
}

MeasureFlow TrajectoryBundle::marginal_flow(const TimeGrid& grid) const {
    std::vector<ParticleMeasure> snaps;
    snaps.reserve(grid.nodes());
    for (int k = 0; k < grid.nodes(); ++k) snaps.push_back(empirical(k));
    return MeasureFlow(grid, std::move(snaps));
}

namespace {

struct Profile {
    // frozen open-loop selection: one or more weighted controls per m0 atom
    struct Item {
        double weight;
        Vec x0;
        std::size_t atom_index;
        RelaxedControl control;
    };
    std::vector<Item> items;
};

Profile select_best_responses(const Model& model, const MeasureFlow& mu, const ValueField& vf,
                              bool split_ties, std::size_t split_cap, bool parallel) {
    auto stats = flow_stats(model, mu);
    const auto& m0 = model.m0;
    std::vector<std::vector<Profile::Item>> per_atom(m0.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(m0.size()); ++a) {
        auto x0s = m0.point(a);
        Vec x0(x0s.begin(), x0s.end());
        if (split_ties) {
            auto controls = best_response_split_with_stats(model, stats, vf, x0, split_cap);
            double share = m0.weight(a) / static_cast<double>(controls.size());
            for (auto& c : controls)
                per_atom[a].push_back(
                    {share, x0, static_cast<std::size_t>(a), std::move(c)});
        } else {
            per_atom[a].push_back({m0.weight(a), x0, static_cast<std::size_t>(a),
                                   best_response_with_stats(model, stats, vf, x0)});
        }
    }
    Profile profile;
    for (auto& items : per_atom)
        for (auto& it : items) profile.items.push_back(std::move(it));
    return profile;
}

TrajectoryBundle integrate_profile(const Model& model, const TimeGrid& grid,
                                   const std::vector<std::vector<double>>& stats,
                                   const Profile& profile, bool parallel) {
    TrajectoryBundle bundle;
    bundle.entries.resize(profile.items.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(profile.items.size()); ++i) {
        const auto& it = profile.items[i];
        BundleEntry e;
        e.weight = it.weight;
        e.x0 = it.x0;
        e.atom_index = it.atom_index;
        e.control = it.control;
        e.trajectory = integrate_with_stats(model, grid, stats, 0, it.x0, it.control);
        bundle.entries[i] = std::move(e);
    }
    return bundle;
}

// fixed-profile process flow: iterate flow -> integrate -> marginal flow
// until stationary; the returned bundle's marginals ARE the returned flow
struct ProcessResult {
    MeasureFlow flow;
    TrajectoryBundle bundle;
    bool converged = false;
    int rounds = 0;
};

ProcessResult process_flow(const Model& model, const Profile& profile, MeasureFlow start,
                           double tol, int max_iter, bool parallel) {
    ProcessResult out{std::move(start), {}, false, 0};
    for (int round = 0; round < max_iter; ++round) {
        auto stats = flow_stats(model, out.flow);
        TrajectoryBundle bundle =
            integrate_profile(model, out.flow.grid, stats, profile, parallel);
        MeasureFlow next = bundle.marginal_flow(out.flow.grid);
        double delta = flow_distance(next, out.flow, parallel);
        out.flow = std::move(next);
        out.bundle = std::move(bundle);
        out.rounds = round + 1;
        if (delta <= tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace

ApplyAResult apply_A(const Model& model, const MeasureFlow& mu, const StateGrid& sgrid,
                     bool split_ties, bool parallel) {
    ApplyAResult out;
    out.vfield = solve_value(model, mu, sgrid, parallel);
    Profile profile =
        select_best_responses(model, mu, out.vfield, split_ties, 64, parallel);
    auto stats = flow_stats(model, mu);
    out.bundle = integrate_profile(model, mu.grid, stats, profile, parallel);
    out.nu = out.bundle.marginal_flow(mu.grid);
    return out;
}

EquilibriumResult fixed_point_solve(const Model& model, const TimeGrid& tgrid,
                                    const StateGrid& sgrid, const SolveOptions& opts) {
    if (!(opts.tol_w > 0.0)) throw std::invalid_argument("fixed_point_solve: tol_w must be > 0");
    if (opts.max_iter < 1) throw std::invalid_argument("fixed_point_solve: max_iter must be >= 1");

    auto beta = [&](int k) {
        return opts.schedule == Schedule::Picard ? 1.0 : 1.0 / (k + 2.0);
    };

    EquilibriumResult res;
    MeasureFlow mu = MeasureFlow::frozen(tgrid, model.m0);
    ApplyAResult cur = apply_A(model, mu, sgrid, opts.split_ties, opts.parallel);
    int k = 0;

    auto finalize = [&](const ApplyAResult& cand, const MeasureFlow& base) {
        Profile profile;
        for (const auto& e : cand.bundle.entries)
            profile.items.push_back({e.weight, e.x0, e.atom_index, e.control});
        return process_flow(model, profile, base, opts.finalize_tol, opts.finalize_max_iter,
                            opts.parallel);
    };

    while (true) {
        double rho = flow_distance(cur.nu, mu, opts.parallel);
        res.residual_history.push_back(rho);
        bool out_of_budget = k >= opts.max_iter;
        if (rho <= opts.tol_w || out_of_budget) {
            // polish to exact bundle-flow consistency, then verify honestly
            ProcessResult proc = finalize(cur, cur.nu);
            ValueField vf = solve_value(model, proc.flow, sgrid, opts.parallel);
            Profile fresh = select_best_responses(model, proc.flow, vf, opts.split_ties,
                                                  opts.split_branch_cap, opts.parallel);
            auto stats = flow_stats(model, proc.flow);
            TrajectoryBundle fresh_bundle =
                integrate_profile(model, tgrid, stats, fresh, opts.parallel);
            MeasureFlow a_of_flow = fresh_bundle.marginal_flow(tgrid);
            double residual = flow_distance(a_of_flow, proc.flow, opts.parallel);

            if (residual <= opts.tol_w || out_of_budget) {
                res.flow = std::move(proc.flow);
                res.vfield = std::move(vf);
                res.bundle = std::move(proc.bundle);
                res.residual = residual;
                res.residual_history.push_back(residual);
                res.converged = residual <= opts.tol_w;
                res.iterations = k;
                // measured one-shot optimality defect of the scheme
                double cons = 0.0;
                for (const auto& e : res.bundle.entries) {
                    double p = payoff_of_trajectory(model, stats, e.trajectory);
                    double v = res.vfield.value_at(0, e.x0);
                    cons = std::max(cons, std::abs(p - v));
                }
                res.consistency_bound = cons;
                return res;
            }
            // verification failed: continue iterating from the polished flow
            mu = std::move(proc.flow);
            cur.nu = std::move(a_of_flow);
            cur.bundle = std::move(fresh_bundle);
            cur.vfield = std::move(vf);
            ++k;
            continue;
        }
        MeasureFlow mixed = mix_flows(mu, cur.nu, beta(k));
        ConsolidationReport crep;
        mu = consolidate_flow(mixed, opts.particle_cap, &crep);
        res.consolidation_w1 = std::max(res.consolidation_w1, crep.w1_perturbation);
        cur = apply_A(model, mu, sgrid, opts.split_ties, opts.parallel);
        ++k;
    }
}

std::size_t CellPartition::locate(std::span<const double> x) const {
    std::size_t flat = 0;
    for (std::size_t d = 0; d < cells.size(); ++d) {
        double w = (box.hi[d] - box.lo[d]) / cells[d];
        int c = static_cast<int>(std::floor((x[d] - box.lo[d]) / w));
        c = std::max(0, std::min(c, cells[d] - 1));
        flat = flat * static_cast<std::size_t>(cells[d]) + static_cast<std::size_t>(c);
    }
    return flat;
}

Vec CellPartition::center(std::size_t flat) const {
    Vec c(cells.size());
    for (int d = static_cast<int>(cells.size()) - 1; d >= 0; --d) {
        double w = (box.hi[d] - box.lo[d]) / cells[d];
        std::size_t idx = flat % static_cast<std::size_t>(cells[d]);
        c[d] = box.lo[d] + (static_cast<double>(idx) + 0.5) * w;
        flat /= static_cast<std::size_t>(cells[d]);
    }
    return c;
}

std::vector<CellVelocity> mean_field_velocity(const TrajectoryBundle& bundle, int node_k,
                                              const CellPartition& partition) {
    if (bundle.entries.empty()) throw std::invalid_argument("mean_field_velocity: empty bundle");
    const TimeGrid& grid = bundle.entries.front().trajectory.grid;
    if (node_k < 0 || node_k >= grid.steps)
        throw std::invalid_argument("mean_field_velocity: node must have a forward neighbor");
    int dim = bundle.entries.front().trajectory.dim;
    double dt = grid.dt();

    std::vector<double> mass(partition.total(), 0.0);
    std::vector<Vec> momentum(partition.total(), Vec(dim, 0.0));
    for (const auto& e : bundle.entries) {
        auto xk = e.trajectory.state(node_k);
        auto xk1 = e.trajectory.state(node_k + 1);
        std::size_t cell = partition.locate(xk);
        mass[cell] += e.weight;
        for (int d = 0; d < dim; ++d) momentum[cell][d] += e.weight * (xk1[d] - xk[d]) / dt;
    }
    std::vector<CellVelocity> out;
    for (std::size_t c = 0; c < mass.size(); ++c) {
        if (mass[c] == 0.0) continue;
        CellVelocity cv;
        cv.cell = c;
        cv.mass = mass[c];
        cv.b = momentum[c];
        for (int d = 0; d < dim; ++d) cv.b[d] /= mass[c];
        out.push_back(std::move(cv));
    }
    return out;
}

namespace reference {

std::vector<Trajectory> integrate_bundle_ref(const Model& model, const TimeGrid& grid,
                                             const std::vector<std::vector<double>>& stats,
                                             const TrajectoryBundle& bundle) {
    std::vector<Trajectory> out;
    out.reserve(bundle.entries.size());
    for (const auto& e : bundle.entries)
        out.push_back(integrate_with_stats(model, grid, stats, 0, e.x0, e.control));
    return out;
}

}  // namespace reference

}  // namespace mfg
