#include "mfg/nplayer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace mfg {

namespace {

std::vector<Vec> quantile_sites(const ParticleMeasure& m0, std::size_t N) {
    if (m0.dim() != 1)
        throw std::invalid_argument("setup_players: quantile sites are 1D only");
    std::vector<std::size_t> idx(m0.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&m0](std::size_t a, std::size_t b) {
        return m0.point(a)[0] < m0.point(b)[0];
    });
    // split the sorted mass into N chunks of 1/N; site = chunk barycenter
    std::vector<Vec> sites;
    sites.reserve(N);
    const double chunk = 1.0 / static_cast<double>(N);
    std::size_t p = 0;
    double rem = m0.weight(idx[0]);
    for (std::size_t i = 0; i < N; ++i) {
        double need = chunk;
        double moment = 0.0;
        while (need > 1e-15 && p < m0.size()) {
            double take = std::min(need, rem);
            moment += take * m0.point(idx[p])[0];
            need -= take;
            rem -= take;
            if (rem <= 1e-15 && p + 1 < m0.size()) {
                ++p;
                rem = m0.weight(idx[p]);
            } else if (rem <= 1e-15) {
                ++p;  // exhausted
            }
        }
        sites.push_back({moment / chunk});
    }
    return sites;
}

std::vector<Vec> iid_sites(const ParticleMeasure& m0, std::size_t N, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::vector<Vec> sites;
    sites.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
        double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        double acc = 0.0;
        std::size_t pick = m0.size() - 1;
        for (std::size_t a = 0; a < m0.size(); ++a) {
            acc += m0.weight(a);
            if (u < acc) {
                pick = a;
                break;
            }
        }
        auto x = m0.point(pick);
        sites.push_back(Vec(x.begin(), x.end()));
    }
    return sites;
}

}  // namespace

PlayerSetup setup_players(const Model& model, std::size_t N, SiteRule rule,
                          unsigned long long seed, const std::vector<Vec>* user_sites) {
    if (N < 1) throw std::invalid_argument("setup_players: N must be >= 1");
    PlayerSetup setup;
    switch (rule) {
        case SiteRule::Quantile: setup.sites = quantile_sites(model.m0, N); break;
        case SiteRule::IidSample: setup.sites = iid_sites(model.m0, N, seed); break;
        case SiteRule::UserList:
            if (!user_sites || user_sites->size() != N)
                throw std::invalid_argument("setup_players: user site list of size N required");
            setup.sites = *user_sites;
            break;
    }
    EmpiricalDecomposition dec = decompose_to_empirical(model.m0, setup.sites);
    setup.parts = std::move(dec.parts);
    setup.w_emp = dec.w;
    setup.plan = std::move(dec.plan);
    double dmax = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double di = 0.0;
        const auto& part = setup.parts[i];
        for (std::size_t a = 0; a < part.size(); ++a)
            di += part.weight(a) * dist(part.point(a), setup.sites[i]);
        dmax = std::max(dmax, di);
    }
    setup.d_max = dmax;
    return setup;
}

RandomProfile build_profile(const EquilibriumResult& equilibrium, const Model& model,
                            const PlayerSetup& setup) {
    const auto& bundle = equilibrium.bundle;
    const auto& m0 = model.m0;
    std::size_t N = setup.sites.size();

    // entries grouped by originating atom, with positions verified
    std::vector<std::vector<std::size_t>> atom_entries(m0.size());
    std::vector<double> atom_mass(m0.size(), 0.0);
    for (std::size_t e = 0; e < bundle.entries.size(); ++e) {
        const auto& entry = bundle.entries[e];
        if (entry.atom_index >= m0.size())
            throw std::runtime_error("build_profile: bundle atom absent from plan support");
        auto p = m0.point(entry.atom_index);
        for (int d = 0; d < m0.dim(); ++d)
            if (p[d] != entry.x0[d])
                throw std::runtime_error("build_profile: bundle atom absent from plan support");
        atom_entries[entry.atom_index].push_back(e);
        atom_mass[entry.atom_index] += entry.weight;
    }

    RandomProfile profile;
    profile.players.resize(N);
    for (const PlanEntry& pe : setup.plan.entries) {
        if (atom_entries[pe.from].empty())
            throw std::runtime_error("build_profile: bundle atom absent from plan support");
        for (std::size_t e : atom_entries[pe.from]) {
            const auto& entry = bundle.entries[e];
            double share = entry.weight / atom_mass[pe.from];
            auto& mix = profile.players[pe.to];
            mix.probs.push_back(static_cast<double>(N) * pe.mass * share);
            mix.controls.push_back(entry.control);
            mix.bundle_entries.push_back(e);
        }
    }
    for (auto& mix : profile.players) {
        if (mix.probs.empty())
            throw std::runtime_error("build_profile: player received no controls");
        double s = std::accumulate(mix.probs.begin(), mix.probs.end(), 0.0);
        for (double& p : mix.probs) p /= s;
    }
    return profile;
}

namespace {

struct Copies {
    // one trajectory copy per (player, mixture item)
    std::vector<std::size_t> player;
    std::vector<double> flow_weight;  // (1/N) * mixture probability
    std::vector<double> mix_prob;
    std::vector<const RelaxedControl*> control;
    std::vector<const Vec*> x0;
};

Copies expand_copies(const PlayerSetup& setup, const RandomProfile& profile,
                     const std::optional<std::pair<std::size_t, ControlMixture>>& deviation) {
    std::size_t N = setup.sites.size();
    Copies c;
    for (std::size_t i = 0; i < N; ++i) {
        const ControlMixture* mix = &profile.players[i];
        if (deviation && deviation->first == i) mix = &deviation->second;
        for (std::size_t m = 0; m < mix->controls.size(); ++m) {
            c.player.push_back(i);
            c.flow_weight.push_back(mix->probs[m] / static_cast<double>(N));
            c.mix_prob.push_back(mix->probs[m]);
            c.control.push_back(&mix->controls[m]);
            c.x0.push_back(&setup.sites[i]);
        }
    }
    return c;
}

MeasureFlow copies_flow(const TimeGrid& grid, int dim, const Copies& copies,
                        const std::vector<Trajectory>& trajs) {
    std::vector<ParticleMeasure> snaps;
    snaps.reserve(grid.nodes());
    for (int k = 0; k < grid.nodes(); ++k) {
        std::vector<double> pts, ws;
        pts.reserve(trajs.size() * dim);
        ws.reserve(trajs.size());
        for (std::size_t c = 0; c < trajs.size(); ++c) {
            auto x = trajs[c].state(k);
            pts.insert(pts.end(), x.begin(), x.end());
            ws.push_back(copies.flow_weight[c]);
        }
        snaps.push_back(ParticleMeasure::normalized(dim, std::move(pts), std::move(ws)));
    }
    return MeasureFlow(grid, std::move(snaps));
}

}  // namespace

SimulationResult simulate_profile(const Model& model, const PlayerSetup& setup,
                                  const RandomProfile& profile,
                                  const std::optional<std::pair<std::size_t, ControlMixture>>&
                                      deviation,
                                  double tol, int max_iter, bool parallel) {
    if (profile.players.size() != setup.sites.size())
        throw std::invalid_argument("simulate_profile: profile/setup size mismatch");
    if (deviation && deviation->first >= setup.sites.size())
        throw std::invalid_argument("simulate_profile: deviating player out of range");

    Copies copies = expand_copies(setup, profile, deviation);
    if (copies.player.empty()) throw std::invalid_argument("simulate_profile: empty profile");
    const TimeGrid grid = copies.control.front()->grid;
    const int dim = model.dim;
    const std::size_t N = setup.sites.size();

    // start from the frozen empirical flow on the sites
    {
        std::vector<double> pts, ws;
        for (const Vec& s : setup.sites) {
            pts.insert(pts.end(), s.begin(), s.end());
            ws.push_back(1.0 / static_cast<double>(N));
        }
        (void)pts;
        (void)ws;
    }
    std::vector<double> site_pts;
    for (const Vec& s : setup.sites) site_pts.insert(site_pts.end(), s.begin(), s.end());
    MeasureFlow nu = MeasureFlow::frozen(
        grid, ParticleMeasure(dim, site_pts,
                              std::vector<double>(N, 1.0 / static_cast<double>(N))));

    SimulationResult result;
    std::vector<Trajectory> trajs(copies.player.size());
    for (int round = 0; round < max_iter; ++round) {
        auto stats = flow_stats(model, nu);
#pragma omp parallel for schedule(dynamic) if (parallel)
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(trajs.size()); ++c)
            trajs[c] =
                integrate_with_stats(model, grid, stats, 0, *copies.x0[c], *copies.control[c]);
        MeasureFlow next = copies_flow(grid, dim, copies, trajs);
        double delta = flow_distance(next, nu, parallel);
        nu = std::move(next);
        result.inner_rounds = round + 1;
        if (delta <= tol) {
            result.converged = true;
            break;
        }
    }

    auto stats = flow_stats(model, nu);
    result.payoffs.assign(N, 0.0);
    for (std::size_t c = 0; c < trajs.size(); ++c)
        result.payoffs[copies.player[c]] +=
            copies.mix_prob[c] * payoff_of_trajectory(model, stats, trajs[c]);
    result.flow = std::move(nu);
    return result;
}

std::vector<double> evaluate_payoffs_frozen(const Model& model, const PlayerSetup& setup,
                                            const RandomProfile& profile,
                                            const MeasureFlow& flow) {
    Copies copies = expand_copies(setup, profile, std::nullopt);
    auto stats = flow_stats(model, flow);
    std::vector<double> payoffs(setup.sites.size(), 0.0);
    for (std::size_t c = 0; c < copies.player.size(); ++c) {
        Trajectory traj =
            integrate_with_stats(model, flow.grid, stats, 0, *copies.x0[c], *copies.control[c]);
        payoffs[copies.player[c]] += copies.mix_prob[c] * payoff_of_trajectory(model, stats, traj);
    }
    return payoffs;
}

double deviation_gain(const Model& model, const PlayerSetup& setup, const RandomProfile& profile,
                      std::size_t player_j, const std::vector<RelaxedControl>& candidates,
                      double tol, int max_iter, const SimulationResult* baseline, bool parallel) {
    if (candidates.empty()) throw std::invalid_argument("deviation_gain: empty candidate set");
    SimulationResult base_local;
    if (!baseline) {
        base_local = simulate_profile(model, setup, profile, std::nullopt, tol, max_iter, parallel);
        baseline = &base_local;
    }
    double gain = -std::numeric_limits<double>::infinity();
    for (const RelaxedControl& cand : candidates) {
        auto dev = std::make_optional(
            std::make_pair(player_j, ControlMixture::pure(cand)));
        SimulationResult out =
            simulate_profile(model, setup, profile, dev, tol, max_iter, parallel);
        gain = std::max(gain, out.payoffs[player_j] - baseline->payoffs[player_j]);
    }
    return gain;
}

NPlayerOutcome probe_all_players(const Model& model, const StateGrid& sgrid,
                                 const PlayerSetup& setup, const RandomProfile& profile,
                                 const GapStudyOptions& opts) {
    NPlayerOutcome outcome;
    outcome.baseline = simulate_profile(model, setup, profile, std::nullopt, opts.inner_tol,
                                        opts.inner_max_iter, opts.parallel);
    outcome.all_converged = outcome.baseline.converged;

    // one DP against the baseline flow serves every player's probe
    ValueField vf = solve_value(model, outcome.baseline.flow, sgrid, opts.parallel);
    auto stats = flow_stats(model, outcome.baseline.flow);
    const TimeGrid& grid = outcome.baseline.flow.grid;

    auto ledger = constant_ledger(model);
    outcome.bound = ledger.at("Chat1") * setup.w_emp + ledger.at("Chat2") * setup.d_max +
                    ledger.at("Chat3") / static_cast<double>(setup.sites.size());

    outcome.gaps.resize(setup.sites.size());
    for (std::size_t j = 0; j < setup.sites.size(); ++j) {
        std::vector<RelaxedControl> candidates;
        candidates.push_back(best_response_with_stats(model, stats, vf, setup.sites[j]));
        for (std::size_t u = 0; u < model.n_controls(); ++u)
            candidates.push_back(RelaxedControl::constant_pure(grid, model.n_controls(), u));
        outcome.gaps[j] = deviation_gain(model, setup, profile, j, candidates, opts.inner_tol,
                                         opts.inner_max_iter, &outcome.baseline, opts.parallel);
    }
    return outcome;
}

std::vector<GapRow> nash_gap_curve(const Model& model, const EquilibriumResult& equilibrium,
                                   const StateGrid& sgrid, const std::vector<std::size_t>& N_list,
                                   const std::vector<unsigned long long>& seeds,
                                   const GapStudyOptions& opts) {
    for (std::size_t i = 1; i < N_list.size(); ++i)
        if (!(N_list[i] > N_list[i - 1]))
            throw std::invalid_argument("nash_gap_curve: N_list must be ascending");

    std::vector<GapRow> rows;
    for (std::size_t N : N_list) {
        for (unsigned long long seed : seeds) {
            PlayerSetup setup = setup_players(model, N, opts.site_rule, seed);
            RandomProfile profile = build_profile(equilibrium, model, setup);
            NPlayerOutcome outcome = probe_all_players(model, sgrid, setup, profile, opts);
            GapRow row;
            row.N = N;
            row.seed = seed;
            row.w_emp = setup.w_emp;
            row.d_max = setup.d_max;
            row.gain = *std::max_element(outcome.gaps.begin(), outcome.gaps.end());
            row.bound = outcome.bound;
            row.converged = outcome.all_converged;
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace mfg
