// Problem data: dynamics f, running cost g, terminal reward sigma over a
// finite control set, the initial measure, and the derived bounds (invariant
// box G, speed bound K, Lipschitz ledger and the estimate constants built
// from it).
//
// Measure arguments reach f/g/sigma through a per-snapshot statistic vector
// (moments, kernel densities on a lattice, ...) declared by the model; this
// keeps the measure dependence nonlocal and W1-Lipschitz and lets hot loops
// evaluate the statistics once per time node.
#ifndef MFG_MODEL_HPP
#define MFG_MODEL_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "mfg/measures.hpp"

namespace mfg {

struct LipschitzLedger {
    double L_fx = 0.0, L_fm = 0.0;
    double L_gx = 0.0, L_gm = 0.0;
    double L_sx = 0.0, L_sm = 0.0;

    void validate() const {
        for (double v : {L_fx, L_fm, L_gx, L_gm, L_sx, L_sm})
            if (!(v >= 0.0)) throw std::invalid_argument("LipschitzLedger: negative constant");
    }
};

struct DomainBounds {
    Box G;         // invariant box for the controlled dynamics
    double K = 0;  // speed bound sup ||f|| over G x P(G) x P
};

struct Model {
    std::string name;
    int dim = 1;
    double horizon = 1.0;
    std::vector<Vec> control_set;

    int stat_dim = 0;
    // stats(t, m) -> out[stat_dim]; identity of the statistic family is part
    // of the model definition
    std::function<void(double, const ParticleMeasure&, std::span<double>)> measure_stats;
    // f(t, x, stats, u) -> out[dim]
    std::function<void(double, std::span<const double>, std::span<const double>,
                       std::span<const double>, std::span<double>)>
        drift;
    // g(t, x, stats, u)
    std::function<double(double, std::span<const double>, std::span<const double>,
                         std::span<const double>)>
        running_cost;
    // sigma(x, stats at T)
    std::function<double(std::span<const double>, std::span<const double>)> terminal_value;

    ParticleMeasure m0;
    LipschitzLedger lipschitz;
    std::optional<DomainBounds> bounds;

    std::size_t n_controls() const { return control_set.size(); }

    void validate() const {
        if (control_set.empty()) throw std::invalid_argument("Model: empty control set");
        if (m0.dim() != dim) throw std::invalid_argument("Model: m0 dimension mismatch");
        if (!(horizon > 0.0)) throw std::invalid_argument("Model: horizon must be positive");
        lipschitz.validate();
    }

    std::vector<double> eval_stats(double t, const ParticleMeasure& m) const {
        std::vector<double> s(stat_dim);
        if (stat_dim > 0) measure_stats(t, m, s);
        return s;
    }
};

// stats per flow node; stats[k] corresponds to grid node k
std::vector<std::vector<double>> flow_stats(const Model& model, const MeasureFlow& mu);

struct HamiltonianEval {
    double value = 0.0;
    std::vector<std::size_t> argmax_controls;  // in control-index order
};

// exact max over the finite control set of <p, f(t,x,m,u)> - g(t,x,m,u);
// the argmax list collects exact float ties in index order
HamiltonianEval hamiltonian(const Model& model, double t, std::span<const double> x,
                            const ParticleMeasure& m, std::span<const double> p);
HamiltonianEval hamiltonian_with_stats(const Model& model, double t, std::span<const double> x,
                                       std::span<const double> stats, std::span<const double> p);

// convex conjugate of H in the velocity variable: the least mixed running
// cost among control mixtures realizing velocity xi, +infinity outside the
// hull of {f(u)}
double conjugate(const Model& model, double t, std::span<const double> x,
                 const ParticleMeasure& m, std::span<const double> xi);
double conjugate_with_stats(const Model& model, double t, std::span<const double> x,
                            std::span<const double> stats, std::span<const double> xi);

// Invariant box by outward-speed face expansion from the support of m0, plus
// the sampled speed bound; both inflated by safety_factor.
DomainBounds bound_box_and_K(const Model& model, const TimeGrid& grid,
                             double safety_factor = 1.1);

// Named constants of the estimate chain (C1..C8 and the hat constants of the
// deviation bound), computed from the ledger, horizon and diam(G).
std::map<std::string, double> constant_ledger(const Model& model);

struct LedgerConsistency {
    // worst sampled finite-difference ratio per declared constant (<= 1 means
    // the declaration covers the samples)
    std::map<std::string, double> ratio;
    bool consistent(double slack = 1.01) const {
        for (const auto& [k, v] : ratio)
            if (v > slack) return false;
        return true;
    }
};

// Samples finite differences of f, g, sigma over G and compares against the
// declared ledger; advisory (callers warn, not fail).
LedgerConsistency ledger_consistency(const Model& model, int samples, unsigned long long seed);

}  // namespace mfg

#endif
