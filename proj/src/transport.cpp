#include "mfg/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mfg {

namespace {

// ---------------------------------------------------------------------------
// 1D: sorted-quantile coupling.  Walk both sorted weight sequences and match
// mass in CDF order; at equal cumulative weights the lower-index atom is
// consumed first (sort is stable on the original index).
// ---------------------------------------------------------------------------
TransportPlan plan_quantile_1d(const ParticleMeasure& a, const ParticleMeasure& b) {
    auto order = [](const ParticleMeasure& m) {
        std::vector<std::size_t> idx(m.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&m](std::size_t i, std::size_t j) {
            return m.point(i)[0] < m.point(j)[0];
        });
        return idx;
    };
    std::vector<std::size_t> ia = order(a), ib = order(b);

    TransportPlan plan;
    std::size_t pa = 0, pb = 0;
    double ra = a.weight(ia[0]), rb = b.weight(ib[0]);
    while (true) {
        double m = std::min(ra, rb);
        double d = std::abs(a.point(ia[pa])[0] - b.point(ib[pb])[0]);
        plan.entries.push_back({ia[pa], ib[pb], m});
        plan.cost += m * d;
        ra -= m;
        rb -= m;
        if (ra <= 0.0) {
            if (++pa == a.size()) break;
            ra = a.weight(ia[pa]);
        }
        if (rb <= 0.0) {
            if (++pb == b.size()) break;
            rb = b.weight(ib[pb]);
        }
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Transportation simplex (MODI / u-v method) on the dense bipartite graph.
// Basis is a spanning tree over rows+cols; north-west corner start; entering
// arc = most negative reduced cost (lexicographic tie-break); leaving arc =
// minimum flow on the cycle's backward arcs, last such arc along the cycle.
// Optimality of the final basis is verified through the duals.
// ---------------------------------------------------------------------------
struct SimplexSolver {
    std::size_t m, n;                 // rows (supply), cols (demand)
    const std::vector<double>& cost;  // m*n row-major
    std::vector<double> supply, demand;

    // basis arcs, tree adjacency
    struct Arc {
        std::size_t i, j;
        double flow;
    };
    std::vector<Arc> basis;
    std::vector<std::vector<int>> adj;  // node -> basis arc indices; rows 0..m-1, cols m..m+n-1
    std::vector<double> u, v;           // duals

    SimplexSolver(std::size_t m_, std::size_t n_, const std::vector<double>& c,
                  std::vector<double> s, std::vector<double> d)
        : m(m_), n(n_), cost(c), supply(std::move(s)), demand(std::move(d)),
          adj(m + n), u(m), v(n) {}

    double c_at(std::size_t i, std::size_t j) const { return cost[i * n + j]; }

    void northwest_start() {
        std::vector<double> s = supply, d = demand;
        std::size_t i = 0, j = 0;
        // exactly m+n-1 basic cells, degenerate zeros included
        while (basis.size() < m + n - 1) {
            double q = std::min(s[i], d[j]);
            add_basis_arc(i, j, q);
            s[i] -= q;
            d[j] -= q;
            bool last_row = (i == m - 1), last_col = (j == n - 1);
            if (!last_row && (s[i] <= d[j] || last_col))
                ++i;
            else if (!last_col)
                ++j;
            else
                break;
        }
    }

    void add_basis_arc(std::size_t i, std::size_t j, double q) {
        adj[i].push_back(static_cast<int>(basis.size()));
        adj[m + j].push_back(static_cast<int>(basis.size()));
        basis.push_back({i, j, q});
    }

    void remove_basis_arc(int bi) {
        // swap-with-last removal, fixing adjacency indices
        int last = static_cast<int>(basis.size()) - 1;
        auto drop = [&](std::size_t node, int id) {
            auto& lst = adj[node];
            for (std::size_t k = 0; k < lst.size(); ++k)
                if (lst[k] == id) {
                    lst[k] = lst.back();
                    lst.pop_back();
                    return;
                }
        };
        drop(basis[bi].i, bi);
        drop(m + basis[bi].j, bi);
        if (bi != last) {
            drop(basis[last].i, last);
            drop(m + basis[last].j, last);
            basis[bi] = basis[last];
            adj[basis[bi].i].push_back(bi);
            adj[m + basis[bi].j].push_back(bi);
        }
        basis.pop_back();
    }

    // duals from the tree: u[0] = 0, c_ij = u_i + v_j on basic arcs
    void compute_duals() {
        std::vector<char> seen(m + n, 0);
        std::vector<std::size_t> stack{0};
        u[0] = 0.0;
        seen[0] = 1;
        while (!stack.empty()) {
            std::size_t node = stack.back();
            stack.pop_back();
            for (int bi : adj[node]) {
                const Arc& a = basis[bi];
                std::size_t other = (node == a.i) ? m + a.j : a.i;
                if (seen[other]) continue;
                seen[other] = 1;
                if (other >= m)
                    v[other - m] = c_at(a.i, a.j) - u[a.i];
                else
                    u[other] = c_at(a.i, a.j) - v[node - m];
                stack.push_back(other);
            }
        }
    }

    // path between two nodes in the basis tree, as a list of basis arc ids
    std::vector<int> tree_path(std::size_t from, std::size_t to) {
        std::vector<int> par_arc(m + n, -1);
        std::vector<std::size_t> par_node(m + n, SIZE_MAX);
        std::vector<char> seen(m + n, 0);
        std::vector<std::size_t> stack{from};
        seen[from] = 1;
        while (!stack.empty()) {
            std::size_t node = stack.back();
            stack.pop_back();
            if (node == to) break;
            for (int bi : adj[node]) {
                const Arc& a = basis[bi];
                std::size_t other = (node == a.i) ? m + a.j : a.i;
                if (seen[other]) continue;
                seen[other] = 1;
                par_arc[other] = bi;
                par_node[other] = node;
                stack.push_back(other);
            }
        }
        std::vector<int> path;
        for (std::size_t node = to; node != from; node = par_node[node])
            path.push_back(par_arc[node]);
        std::reverse(path.begin(), path.end());
        return path;
    }

    void run() {
        northwest_start();
        const double scale = [&] {
            double s = 1.0;
            for (double c : cost) s = std::max(s, std::abs(c));
            return s;
        }();
        const double tol = 1e-13 * scale;
        const std::size_t max_pivots = 64 * (m + n) * std::max<std::size_t>(m + n, 64);
        for (std::size_t pivot = 0;; ++pivot) {
            if (pivot > max_pivots)
                throw std::runtime_error("transport: simplex pivot limit exceeded");
            compute_duals();
            // entering arc: most negative reduced cost, lexicographic ties
            double best = -tol;
            std::size_t bi_ = SIZE_MAX, bj_ = SIZE_MAX;
            for (std::size_t i = 0; i < m; ++i) {
                const double ui = u[i];
                const double* row = cost.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) {
                    double r = row[j] - ui - v[j];
                    if (r < best) {
                        best = r;
                        bi_ = i;
                        bj_ = j;
                    }
                }
            }
            if (bi_ == SIZE_MAX) break;  // optimal

            // cycle: entering arc + tree path from col node back to row node
            std::vector<int> path = tree_path(m + bj_, bi_);
            // orientation: traversing row->col is a forward (+) arc
            double theta = std::numeric_limits<double>::infinity();
            int leave = -1;
            std::size_t node = m + bj_;
            std::vector<std::pair<int, int>> signed_path;  // (arc id, sign)
            for (int bi : path) {
                const Arc& a = basis[bi];
                int sign = (node == m + a.j) ? -1 : +1;  // arriving at col means arc runs against us
                signed_path.push_back({bi, sign});
                node = (node == a.i) ? m + a.j : a.i;
                if (sign < 0 && a.flow <= theta) {  // '<=' keeps the last candidate: stays strongly feasible
                    theta = a.flow;
                    leave = bi;
                }
            }
            if (leave < 0) throw std::runtime_error("transport: unbounded pivot");
            for (auto [bi, sign] : signed_path) basis[bi].flow += sign * theta;
            std::size_t li = basis[leave].i, lj = basis[leave].j;
            remove_basis_arc(leave);
            add_basis_arc(bi_, bj_, theta);
            (void)li;
            (void)lj;
        }
        // verify optimality certificate
        compute_duals();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (c_at(i, j) - u[i] - v[j] < -1e-9 * scale)
                    throw std::runtime_error("transport: optimality verification failed");
    }
};

TransportPlan plan_simplex(const ParticleMeasure& a, const ParticleMeasure& b) {
    std::size_t m = a.size(), n = b.size();
    std::vector<double> cost(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            cost[i * n + j] = dist(a.point(i), b.point(j));

    SimplexSolver solver(m, n, cost, a.weights(), b.weights());
    solver.run();

    TransportPlan plan;
    for (const auto& arc : solver.basis) {
        if (arc.flow <= 0.0) continue;
        plan.entries.push_back({arc.i, arc.j, arc.flow});
        plan.cost += arc.flow * cost[arc.i * n + arc.j];
    }
    return plan;
}

void check_pair(const ParticleMeasure& a, const ParticleMeasure& b, std::size_t cap) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("transport: dimension mismatch (" + std::to_string(a.dim()) +
                                    " vs " + std::to_string(b.dim()) + ")");
    if (a.size() * b.size() > cap)
        throw std::runtime_error(
            "transport: support size product exceeds cap; subsample the measures");
}

}  // namespace

TransportPlan transport_plan(const ParticleMeasure& a, const ParticleMeasure& b,
                             std::size_t size_cap) {
    check_pair(a, b, size_cap);
    if (a.dim() == 1) return plan_quantile_1d(a, b);
    return plan_simplex(a, b);
}

TransportPlan transport_plan_lp(const ParticleMeasure& a, const ParticleMeasure& b,
                                std::size_t size_cap) {
    check_pair(a, b, size_cap);
    return plan_simplex(a, b);
}

double w1_distance(const ParticleMeasure& a, const ParticleMeasure& b, std::size_t size_cap) {
    return transport_plan(a, b, size_cap).cost;
}

}  // namespace mfg
