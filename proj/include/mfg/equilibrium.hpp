// The best-response push-forward operator A, the fixed-point driver for the
// approximate equilibrium pair (V, mu) with its trajectory bundle, and the
// cell-averaged mean-field velocity reconstruction.
#ifndef MFG_EQUILIBRIUM_HPP
#define MFG_EQUILIBRIUM_HPP

#include "mfg/value.hpp"

namespace mfg {

struct BundleEntry {
    double weight = 0.0;
    Vec x0;
    std::size_t atom_index = 0;  // provenance: index of the originating m0 atom
    RelaxedControl control;
    Trajectory trajectory;
};

// Weighted set of (trajectory, cost, control) realizations: the measure on
// graph-viable trajectories whose time-t marginals reproduce the flow, with
// the generating open-loop profile attached.
struct TrajectoryBundle {
    std::vector<BundleEntry> entries;

    void validate() const {
        double s = 0.0;
        for (const auto& e : entries) {
            if (!(e.weight > 0.0)) throw std::invalid_argument("TrajectoryBundle: weight <= 0");
            s += e.weight;
        }
        if (std::abs(s - 1.0) > kWeightSumTol)
            throw std::invalid_argument("TrajectoryBundle: weights must sum to 1");
    }

    // e_t # chi at node k (coincident states merged)
    ParticleMeasure empirical(int k) const;
    // the whole marginal flow; snapshots merge coincident states exactly
    MeasureFlow marginal_flow(const TimeGrid& grid) const;
};

struct ApplyAResult {
    MeasureFlow nu;
    TrajectoryBundle bundle;
    ValueField vfield;
};

// One application of the operator: solve the value against mu, extract a best
// response per m0 atom (optionally split across first-step ties), integrate,
// and push the bundle forward.  nu[0] equals m0 exactly.
ApplyAResult apply_A(const Model& model, const MeasureFlow& mu, const StateGrid& sgrid,
                     bool split_ties = false, bool parallel = true);

enum class Schedule { Picard, FictitiousPlay };

struct SolveOptions {
    Schedule schedule = Schedule::FictitiousPlay;
    double tol_w = 1e-3;
    int max_iter = 50;
    std::size_t particle_cap = 5000;
    bool split_ties = false;
    std::size_t split_branch_cap = 64;
    bool parallel = true;
    // self-consistency polish of the returned flow under the frozen profile
    double finalize_tol = 1e-13;
    int finalize_max_iter = 200;
};

struct EquilibriumResult {
    MeasureFlow flow;        // self-consistent marginal flow of the bundle
    ValueField vfield;       // value solved against `flow`
    TrajectoryBundle bundle; // profile chi; e_t # chi == flow by construction
    double residual = 0.0;   // flow distance between A(flow) and flow
    int iterations = 0;      // accepted update steps
    bool converged = false;
    std::vector<double> residual_history;
    double consistency_bound = 0.0;  // max |V(0, x0) - realized payoff| over the bundle
    double consolidation_w1 = 0.0;   // worst support-consolidation perturbation seen
};

// Damped best-response iteration from the frozen-m0 flow.  A candidate that
// passes the proxy tolerance is polished to exact bundle-flow consistency and
// its residual re-verified before the run claims convergence; hitting
// max_iter returns the (finalized) last iterate flagged non-converged.
EquilibriumResult fixed_point_solve(const Model& model, const TimeGrid& tgrid,
                                    const StateGrid& sgrid, const SolveOptions& opts);

// Uniform cell partition of a box, for velocity aggregation.
struct CellPartition {
    Box box;
    std::vector<int> cells;  // per axis

    std::size_t total() const {
        std::size_t t = 1;
        for (int c : cells) t *= static_cast<std::size_t>(c);
        return t;
    }
    std::size_t locate(std::span<const double> x) const;
    Vec center(std::size_t flat) const;
};

struct CellVelocity {
    std::size_t cell = 0;
    Vec b;
    double mass = 0.0;
};

// Mass-weighted average of the discrete trajectory velocities
// (x_{k+1} - x_k)/dt of the entries sitting in each cell at node k; empty
// cells are omitted.
std::vector<CellVelocity> mean_field_velocity(const TrajectoryBundle& bundle, int node_k,
                                              const CellPartition& partition);

namespace reference {
// Serial map of the bundle integration step (one trajectory per entry against
// a fixed flow); comparison baseline for the parallel kernel.
std::vector<Trajectory> integrate_bundle_ref(const Model& model, const TimeGrid& grid,
                                             const std::vector<std::vector<double>>& stats,
                                             const TrajectoryBundle& bundle);
}  // namespace reference

}  // namespace mfg

#endif
