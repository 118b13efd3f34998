// Backward dynamic programming for the value function against a frozen flow
// (semi-Lagrangian with multilinear interpolation), greedy best-response
// extraction, and the numerical viability / directional-derivative checks on
// the computed field.
#ifndef MFG_VALUE_HPP
#define MFG_VALUE_HPP

#include <cstdint>

#include "mfg/dynamics.hpp"

namespace mfg {

class ValueField {
public:
    ValueField() = default;
    ValueField(TimeGrid tg, StateGrid sg)
        : tgrid_(tg), sgrid_(std::move(sg)),
          values_(tg.nodes(), std::vector<double>(sgrid_.total_nodes(), 0.0)),
          argmax_offsets_(tg.steps), argmax_data_(tg.steps) {}

    const TimeGrid& tgrid() const { return tgrid_; }
    const StateGrid& sgrid() const { return sgrid_; }

    std::vector<double>& slice(int k) { return values_[k]; }
    const std::vector<double>& slice(int k) const { return values_[k]; }

    // spatial interpolation at time node k; max_out bounds extrapolation
    double value_at(int k, std::span<const double> x,
                    double max_out = std::numeric_limits<double>::infinity()) const {
        return sgrid_.interpolate(values_[k], x, max_out);
    }

    // bilinear in (t, x)
    double interpolate(double t, std::span<const double> x,
                       double max_out = std::numeric_limits<double>::infinity()) const;

    // tie list of optimal control indices at an interior time node's lattice
    // node; exact float ties in control-index order
    std::span<const std::uint16_t> argmax_at(int k, std::size_t flat) const {
        const auto& off = argmax_offsets_[k];
        return {argmax_data_[k].data() + off[flat], off[flat + 1] - off[flat]};
    }

    std::vector<std::vector<std::uint32_t>>& argmax_offsets() { return argmax_offsets_; }
    std::vector<std::vector<std::uint16_t>>& argmax_data() { return argmax_data_; }

private:
    TimeGrid tgrid_;
    StateGrid sgrid_;
    std::vector<std::vector<double>> values_;
    std::vector<std::vector<std::uint32_t>> argmax_offsets_;
    std::vector<std::vector<std::uint16_t>> argmax_data_;
};

// G inflated by 10% with the given node count per axis.
StateGrid default_state_grid(const Model& model, int nodes_per_axis);

// Backward semi-Lagrangian recursion; terminal slice is sigma at the nodes
// exactly.  State nodes within a slice are independent and run under OpenMP
// when parallel is set.
ValueField solve_value(const Model& model, const MeasureFlow& mu, const StateGrid& sgrid,
                       bool parallel = true);

// Greedy forward extraction of a pure (Dirac-per-cell) control from x0;
// ties resolved to the lowest control index.
RelaxedControl best_response(const Model& model, const MeasureFlow& mu, const ValueField& vf,
                             std::span<const double> x0);
RelaxedControl best_response_with_stats(const Model& model,
                                        const std::vector<std::vector<double>>& stats,
                                        const ValueField& vf, std::span<const double> x0);

// All tie-optimal first steps at each node are expanded into separate pure
// controls (bounded by max_branches); used by the optional atom-splitting
// selector.
std::vector<RelaxedControl> best_response_split(const Model& model, const MeasureFlow& mu,
                                                const ValueField& vf, std::span<const double> x0,
                                                std::size_t max_branches);
std::vector<RelaxedControl> best_response_split_with_stats(
    const Model& model, const std::vector<std::vector<double>>& stats, const ValueField& vf,
    std::span<const double> x0, std::size_t max_branches);

struct ViabilityReport {
    double graph_defect = 0.0;      // max_k |V(t_k, x_k) - (V(0, x_0) + cost_k)|
    double inclusion_defect = 0.0;  // worst shortfall of zdot against -H*(xdot)
    bool pass = false;
};

// Checks that the trajectory rides the graph of V and that its discrete
// velocities lie in the characteristic inclusion.
ViabilityReport check_viability(const Model& model, const MeasureFlow& mu, const ValueField& vf,
                                const Trajectory& traj, double tol);

struct HadamardReport {
    // signed worst values of the two infinitesimal conditions over the sample
    // points: the hypograph test wants lower_worst >= 0, the epigraph test
    // wants upper_worst <= 0
    double lower_worst = 0.0;
    double upper_worst = 0.0;
    double lower_violation = 0.0;  // max(0, -lower_worst)
    double upper_violation = 0.0;  // max(0,  upper_worst)
};

struct TimeStatePoint {
    double t;
    Vec x;
};

// Difference-quotient estimates of the Hadamard derivatives along the
// characteristic directions; diagnostics only (defects shrink under grid
// refinement, interpolation error pollutes them at any fixed grid).
HadamardReport check_hadamard(const Model& model, const MeasureFlow& mu, const ValueField& vf,
                              const std::vector<TimeStatePoint>& points,
                              const std::vector<double>& deltas);

namespace reference {
// Plain serial DP, written independently of the production kernel; kept as
// the comparison baseline for tests and the benchmark.
ValueField solve_value_ref(const Model& model, const MeasureFlow& mu, const StateGrid& sgrid);
}  // namespace reference

}  // namespace mfg

#endif
