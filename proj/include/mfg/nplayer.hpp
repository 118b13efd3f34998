// The finite-N game: equal-mass decomposition of the initial measure onto
// player sites, routing of the equilibrium profile through the transport
// plan, self-consistent simulation of the coupled system (with optional
// unilateral deviation), and the empirical deviation-gain study against the
// constant-ledger bound.
#ifndef MFG_NPLAYER_HPP
#define MFG_NPLAYER_HPP

#include <optional>

#include "mfg/equilibrium.hpp"

namespace mfg {

enum class SiteRule { Quantile, IidSample, UserList };

struct PlayerSetup {
    std::vector<Vec> sites;              // N initial positions
    std::vector<ParticleMeasure> parts;  // normalized pieces; true piece i is parts[i]/N
    double w_emp = 0.0;                  // W1(m0, uniform empirical on sites)
    double d_max = 0.0;                  // max_i int ||x - site_i|| d(parts[i])
    TransportPlan plan;                  // m0 atom -> site routing
};

// Quantile sites are the barycenters of the N consecutive equal-mass chunks
// of the sorted initial measure (1D only); iid sampling draws sites from m0
// with the given seed.
PlayerSetup setup_players(const Model& model, std::size_t N, SiteRule rule,
                          unsigned long long seed = 0,
                          const std::vector<Vec>* user_sites = nullptr);

struct ControlMixture {
    std::vector<double> probs;
    std::vector<RelaxedControl> controls;
    std::vector<std::size_t> bundle_entries;  // provenance into the equilibrium bundle

    static ControlMixture pure(RelaxedControl c) {
        return ControlMixture{{1.0}, {std::move(c)}, {}};
    }
};

struct RandomProfile {
    std::vector<ControlMixture> players;
};

// Routes each equilibrium bundle entry through the plan: the probability of a
// control under player i is N * (plan mass from its atom to site i) * (entry
// weight share within the atom).
RandomProfile build_profile(const EquilibriumResult& equilibrium, const Model& model,
                            const PlayerSetup& setup);

struct SimulationResult {
    MeasureFlow flow;             // mixture-averaged empirical flow nu_N
    std::vector<double> payoffs;  // expected payoff per player
    bool converged = false;
    int inner_rounds = 0;
};

// Expands mixtures into weighted trajectory copies and Picard-iterates the
// coupled flow until stationary; a deviation replaces player j's mixture and
// the whole system is re-solved.
SimulationResult simulate_profile(const Model& model, const PlayerSetup& setup,
                                  const RandomProfile& profile,
                                  const std::optional<std::pair<std::size_t, ControlMixture>>&
                                      deviation,
                                  double tol, int max_iter, bool parallel = true);

// Expected payoffs of the profile against a frozen flow (no inner iteration);
// expectation is exactly linear in the mixture here.
std::vector<double> evaluate_payoffs_frozen(const Model& model, const PlayerSetup& setup,
                                            const RandomProfile& profile,
                                            const MeasureFlow& flow);

// Max payoff improvement player j can get from the candidate pure controls
// (system re-solved per candidate); a precomputed baseline avoids re-running
// the no-deviation simulation.
double deviation_gain(const Model& model, const PlayerSetup& setup, const RandomProfile& profile,
                      std::size_t player_j, const std::vector<RelaxedControl>& candidates,
                      double tol, int max_iter, const SimulationResult* baseline = nullptr,
                      bool parallel = true);

struct NPlayerOutcome {
    SimulationResult baseline;
    std::vector<double> gaps;  // per probed player
    double bound = 0.0;        // Chat1 w_emp + Chat2 d_max + Chat3 / N
    bool all_converged = false;
};

struct GapRow {
    std::size_t N = 0;
    unsigned long long seed = 0;
    double w_emp = 0.0, d_max = 0.0, gain = 0.0, bound = 0.0;
    bool converged = false;
};

struct GapStudyOptions {
    SiteRule site_rule = SiteRule::Quantile;
    double inner_tol = 1e-4;
    int inner_max_iter = 200;
    bool parallel = true;
};

// Probes every player with the default candidate set: the best response
// against the baseline flow plus all constant pure controls.
NPlayerOutcome probe_all_players(const Model& model, const StateGrid& sgrid,
                                 const PlayerSetup& setup, const RandomProfile& profile,
                                 const GapStudyOptions& opts);

// One row per (N, seed); `gain` is the max gap over probed players.
std::vector<GapRow> nash_gap_curve(const Model& model, const EquilibriumResult& equilibrium,
                                   const StateGrid& sgrid, const std::vector<std::size_t>& N_list,
                                   const std::vector<unsigned long long>& seeds,
                                   const GapStudyOptions& opts);

}  // namespace mfg

#endif
