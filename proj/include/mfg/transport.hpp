// Exact Kantorovich-Rubinstein (Wasserstein-1) transport between particle
// measures: sorted-quantile coupling in dimension 1, a transportation-simplex
// solve on the dense bipartite support graph in dimension >= 2.
#ifndef MFG_TRANSPORT_HPP
#define MFG_TRANSPORT_HPP

#include <cstddef>
#include <vector>

#include "mfg/particle_measure.hpp"

namespace mfg {

struct PlanEntry {
    std::size_t from;  // atom index in a
    std::size_t to;    // atom index in b
    double mass;
};

struct TransportPlan {
    double cost = 0.0;
    std::vector<PlanEntry> entries;
};

// Support sizes whose product exceeds this require subsampling by the caller.
inline constexpr std::size_t kTransportSizeCap = 2000ull * 2000ull;

// Optimal plan; dispatches on dimension (quantile coupling for 1D, simplex
// otherwise).  Ties in the 1D coupling consume the lower-index atom first.
TransportPlan transport_plan(const ParticleMeasure& a, const ParticleMeasure& b,
                             std::size_t size_cap = kTransportSizeCap);

// Force the LP route regardless of dimension (used to cross-check 1D).
TransportPlan transport_plan_lp(const ParticleMeasure& a, const ParticleMeasure& b,
                                std::size_t size_cap = kTransportSizeCap);

double w1_distance(const ParticleMeasure& a, const ParticleMeasure& b,
                   std::size_t size_cap = kTransportSizeCap);

}  // namespace mfg

#endif
