#include "mfg/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mfg {

double flow_distance(const MeasureFlow& mu, const MeasureFlow& nu, bool parallel) {
    if (!(mu.grid == nu.grid))
        throw std::invalid_argument("flow_distance: time grids differ");
    int n = mu.grid.nodes();
    std::vector<double> per_node(n);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int k = 0; k < n; ++k)
        per_node[k] = w1_distance(mu.snapshots[k], nu.snapshots[k]);
    double d = 0.0;
    for (double v : per_node) d = std::max(d, v);
    return d;
}

ParticleMeasure push_forward(const ParticleMeasure& m,
                             const std::function<Vec(std::span<const double>)>& map,
                             double merge_radius) {
    int n = m.dim();
    std::vector<double> pts;
    std::vector<double> ws;
    pts.reserve(m.size() * n);
    ws.reserve(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        Vec y = map(m.point(i));
        if (static_cast<int>(y.size()) != n)
            throw std::invalid_argument("push_forward: map changed dimension");
        // merge into an earlier image if within radius
        bool merged = false;
        for (std::size_t j = 0; j < ws.size(); ++j) {
            double d2 = 0.0;
            for (int d = 0; d < n; ++d) {
                double e = pts[j * n + d] - y[d];
                d2 += e * e;
            }
            if (d2 <= merge_radius * merge_radius) {
                ws[j] += m.weight(i);
                merged = true;
                break;
            }
        }
        if (!merged) {
            for (int d = 0; d < n; ++d) pts.push_back(y[d]);
            ws.push_back(m.weight(i));
        }
    }
    return ParticleMeasure(n, std::move(pts), std::move(ws));
}

EmpiricalDecomposition decompose_to_empirical(const ParticleMeasure& m0,
                                              const std::vector<Vec>& sites) {
    if (sites.empty()) throw std::invalid_argument("decompose_to_empirical: no sites");
    std::size_t N = sites.size();
    int n = m0.dim();
    std::vector<double> pts;
    pts.reserve(N * n);
    for (const Vec& s : sites) {
        if (static_cast<int>(s.size()) != n)
            throw std::invalid_argument("decompose_to_empirical: site dimension mismatch");
        pts.insert(pts.end(), s.begin(), s.end());
    }
    ParticleMeasure empirical(n, std::move(pts), std::vector<double>(N, 1.0 / N));

    EmpiricalDecomposition out;
    out.plan = transport_plan(m0, empirical);
    out.w = out.plan.cost;

    // condition the plan on each site; scale each conditional to mass 1
    std::vector<std::vector<double>> part_pts(N), part_ws(N);
    for (const PlanEntry& e : out.plan.entries) {
        auto x = m0.point(e.from);
        part_pts[e.to].insert(part_pts[e.to].end(), x.begin(), x.end());
        part_ws[e.to].push_back(e.mass * static_cast<double>(N));
    }
    out.parts.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
        if (part_ws[i].empty())
            throw std::runtime_error("decompose_to_empirical: site received no mass");
        out.parts.push_back(
            ParticleMeasure(n, std::move(part_pts[i]), std::move(part_ws[i])));
    }
    return out;
}

double flow_lipschitz_defect(const MeasureFlow& mu, double K) {
    if (K < 0.0) throw std::invalid_argument("flow_lipschitz_defect: K must be >= 0");
    double dt = mu.grid.dt();
    double defect = 0.0;
    for (int k = 0; k + 1 < mu.grid.nodes(); ++k) {
        double w = w1_distance(mu.snapshots[k], mu.snapshots[k + 1]);
        defect = std::max(defect, std::max(0.0, w - K * dt));
    }
    return defect;
}

namespace {

ParticleMeasure mix_snapshots(const ParticleMeasure& a, const ParticleMeasure& b, double beta) {
    int n = a.dim();
    std::vector<double> pts;
    std::vector<double> ws;
    pts.reserve((a.size() + b.size()) * n);
    ws.reserve(a.size() + b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto x = a.point(i);
        pts.insert(pts.end(), x.begin(), x.end());
        ws.push_back((1.0 - beta) * a.weight(i));
    }
    // merge bitwise-coincident atoms so repeated mixing does not stack
    // duplicates of shared support (node 0 keeps the initial measure intact)
    for (std::size_t i = 0; i < b.size(); ++i) {
        auto y = b.point(i);
        bool merged = false;
        for (std::size_t j = 0; j < a.size(); ++j) {
            bool same = true;
            for (int d = 0; d < n; ++d)
                if (pts[j * n + d] != y[d]) {
                    same = false;
                    break;
                }
            if (same) {
                ws[j] += beta * b.weight(i);
                merged = true;
                break;
            }
        }
        if (!merged) {
            pts.insert(pts.end(), y.begin(), y.end());
            ws.push_back(beta * b.weight(i));
        }
    }
    return ParticleMeasure::normalized(n, std::move(pts), std::move(ws));
}

}  // namespace

MeasureFlow mix_flows(const MeasureFlow& mu, const MeasureFlow& nu, double beta) {
    if (!(mu.grid == nu.grid)) throw std::invalid_argument("mix_flows: time grids differ");
    if (beta >= 1.0) return nu;
    std::vector<ParticleMeasure> snaps;
    snaps.reserve(mu.snapshots.size());
    for (std::size_t k = 0; k < mu.snapshots.size(); ++k)
        snaps.push_back(mix_snapshots(mu.snapshots[k], nu.snapshots[k], beta));
    return MeasureFlow(mu.grid, std::move(snaps));
}

namespace {

ParticleMeasure consolidate_snapshot(const ParticleMeasure& m, std::size_t cap,
                                     double& perturbation) {
    if (m.size() <= cap) return m;
    int n = m.dim();
    std::vector<double> pts(m.raw_points());
    std::vector<double> ws(m.weights());
    std::vector<char> alive(ws.size(), 1);
    std::size_t count = ws.size();
    perturbation = 0.0;
    while (count > cap) {
        // smallest-weight atom, lowest index on ties
        std::size_t victim = SIZE_MAX;
        for (std::size_t i = 0; i < ws.size(); ++i)
            if (alive[i] && (victim == SIZE_MAX || ws[i] < ws[victim])) victim = i;
        // nearest surviving neighbor, lowest index on ties
        std::size_t target = SIZE_MAX;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < ws.size(); ++j) {
            if (!alive[j] || j == victim) continue;
            double d2 = 0.0;
            for (int d = 0; d < n; ++d) {
                double e = pts[j * n + d] - pts[victim * n + d];
                d2 += e * e;
            }
            if (d2 < best) {
                best = d2;
                target = j;
            }
        }
        perturbation += ws[victim] * std::sqrt(best);
        ws[target] += ws[victim];
        alive[victim] = 0;
        --count;
    }
    std::vector<double> out_pts, out_ws;
    out_pts.reserve(count * n);
    out_ws.reserve(count);
    for (std::size_t i = 0; i < ws.size(); ++i) {
        if (!alive[i]) continue;
        for (int d = 0; d < n; ++d) out_pts.push_back(pts[i * n + d]);
        out_ws.push_back(ws[i]);
    }
    return ParticleMeasure::normalized(n, std::move(out_pts), std::move(out_ws));
}

}  // namespace

MeasureFlow consolidate_flow(const MeasureFlow& mu, std::size_t cap,
                             ConsolidationReport* report) {
    std::vector<ParticleMeasure> snaps;
    snaps.reserve(mu.snapshots.size());
    double worst = 0.0;
    for (const auto& s : mu.snapshots) {
        double pert = 0.0;
        snaps.push_back(consolidate_snapshot(s, cap, pert));
        worst = std::max(worst, pert);
    }
    if (report) report->w1_perturbation = worst;
    return MeasureFlow(mu.grid, std::move(snaps));
}

}  // namespace mfg
