// Relaxed-control trajectories against a frozen measure flow: RK4 on the
// mixed vector field with the flow (and its statistics) held at each cell's
// left node, cost accumulated through the same quadrature.
#ifndef MFG_DYNAMICS_HPP
#define MFG_DYNAMICS_HPP

#include "mfg/model.hpp"

namespace mfg {

// Per time cell, a probability vector over the model's control set.
struct RelaxedControl {
    TimeGrid grid;
    std::size_t n_controls = 0;
    std::vector<double> cells;  // steps x n_controls, row-major

    RelaxedControl() = default;
    RelaxedControl(TimeGrid g, std::size_t nc, std::vector<double> data)
        : grid(g), n_controls(nc), cells(std::move(data)) {
        if (cells.size() != static_cast<std::size_t>(grid.steps) * n_controls)
            throw std::invalid_argument("RelaxedControl: cell data size mismatch");
        for (int k = 0; k < grid.steps; ++k) {
            double s = 0.0;
            for (std::size_t u = 0; u < n_controls; ++u) {
                double w = cells[k * n_controls + u];
                if (w < 0.0) throw std::invalid_argument("RelaxedControl: negative weight");
                s += w;
            }
            if (std::abs(s - 1.0) > kWeightSumTol)
                throw std::invalid_argument("RelaxedControl: cell weights must sum to 1");
        }
    }

    std::span<const double> cell(int k) const {
        return {cells.data() + static_cast<std::size_t>(k) * n_controls, n_controls};
    }

    // Dirac on one control index in every cell.
    static RelaxedControl constant_pure(const TimeGrid& g, std::size_t nc, std::size_t index);
    // Dirac per cell following the given index sequence.
    static RelaxedControl pure_sequence(const TimeGrid& g, std::size_t nc,
                                        const std::vector<std::size_t>& indices);
};

struct Trajectory {
    TimeGrid grid;
    int dim = 0;
    std::vector<double> states;  // (steps+1) x dim
    std::vector<double> cost;    // accumulated z = -integral of g; cost[0] = 0

    std::span<const double> state(int k) const {
        return {states.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<const double> terminal_state() const { return state(grid.steps); }
};

// States before start_node are frozen at x0 with zero cost.  Throws
// "invariant box violated" if the state leaves the inflated G box (when the
// model carries bounds).
Trajectory integrate(const Model& model, const MeasureFlow& mu, int start_node,
                     std::span<const double> x0, const RelaxedControl& alpha);

// Hot-path variant with the flow statistics precomputed (stats[k] at node k).
Trajectory integrate_with_stats(const Model& model, const TimeGrid& grid,
                                const std::vector<std::vector<double>>& stats, int start_node,
                                std::span<const double> x0, const RelaxedControl& alpha);

// sigma(x(T), mu[T]) + accumulated cost.
double payoff(const Model& model, const MeasureFlow& mu, int start_node,
              std::span<const double> x0, const RelaxedControl& alpha);
double payoff_of_trajectory(const Model& model, const std::vector<std::vector<double>>& stats,
                            const Trajectory& traj);

// sum over cells of dt * W1 between the cell distributions on the finite
// control set (Euclidean ground cost); metrizes the weak topology on
// grid-discretized relaxed controls.
double control_distance(const RelaxedControl& a, const RelaxedControl& b,
                        const std::vector<Vec>& control_set);

}  // namespace mfg

#endif
