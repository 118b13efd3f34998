// Measure-level operations: flow distance, push-forwards, the equal-mass
// empirical decomposition behind the N-player construction, time-Lipschitz
// defect of a flow, mixing and support consolidation.
#ifndef MFG_MEASURES_HPP
#define MFG_MEASURES_HPP

#include <functional>

#include "mfg/particle_measure.hpp"
#include "mfg/transport.hpp"

namespace mfg {

// sup over grid nodes of the snapshot W1 distance; grids must match.
double flow_distance(const MeasureFlow& mu, const MeasureFlow& nu, bool parallel = true);

// Image measure under a pointwise map; weights preserved, images whose
// distance is <= merge_radius collapse onto one atom (radius 0: exact
// coincidence only).
ParticleMeasure push_forward(const ParticleMeasure& m,
                             const std::function<Vec(std::span<const double>)>& map,
                             double merge_radius = 0.0);

struct EmpiricalDecomposition {
    std::vector<ParticleMeasure> parts;  // normalized: each has mass 1; true pieces are parts[i]/N
    double w;                            // W1(m0, uniform empirical on sites)
    TransportPlan plan;                  // plan between m0 and the site empirical
};

// Optimal-plan split of m0 against the uniform empirical measure on the given
// sites.  parts[i] collects the m0 mass routed to site i, rescaled to mass 1.
EmpiricalDecomposition decompose_to_empirical(const ParticleMeasure& m0,
                                              const std::vector<Vec>& sites);

// max over adjacent nodes of max(0, W(mu[k+1], mu[k]) - K dt); zero certifies
// the discrete K-Lipschitz-in-time property.
double flow_lipschitz_defect(const MeasureFlow& mu, double K);

// Per-snapshot particle union with weights (1-beta) and beta; bitwise-equal
// atom positions are merged.
MeasureFlow mix_flows(const MeasureFlow& mu, const MeasureFlow& nu, double beta);

struct ConsolidationReport {
    double w1_perturbation = 0.0;  // summed over all merges, worst snapshot
};

// Caps each snapshot's support at `cap` atoms by repeatedly moving the
// smallest-weight atom onto its nearest neighbor.  The W1 perturbation of the
// worst snapshot is reported.
MeasureFlow consolidate_flow(const MeasureFlow& mu, std::size_t cap, ConsolidationReport* report);

}  // namespace mfg

#endif
