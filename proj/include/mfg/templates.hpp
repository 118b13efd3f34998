// Built-in model templates, instantiated by name with numeric parameters.
//   uncoupled     f = u, g = u^2/2,                      sigma = -(x - x_target)^2
//   lq1d          f = u, g = u^2/2 + c (x - mean(m))^2,  sigma = -(x - x_target)^2
//   congestion1d  f = u, g = u^2/2 + c rho_h(x; m),      sigma = -(x - x_target)^2
// rho_h is a Gaussian kernel density read through a fixed lattice, so the
// measure enters through finitely many statistics in every template.
#ifndef MFG_TEMPLATES_HPP
#define MFG_TEMPLATES_HPP

#include <map>
#include <string>

#include "mfg/model.hpp"

namespace mfg {

struct MZeroSpec {
    enum class Kind { Grid, Atoms };
    Kind kind = Kind::Grid;
    // Grid: `count` equally weighted atoms at midpoints of [lo, hi] subintervals
    double lo = -0.5, hi = 0.5;
    int count = 100;
    // Atoms: explicit support
    std::vector<Vec> atoms;
    std::vector<double> weights;

    ParticleMeasure build() const;
};

struct ModelSpec {
    std::string template_name = "lq1d";
    std::map<std::string, double> params;  // template-specific numeric parameters
    double horizon = 1.0;
    double control_lo = -1.0, control_hi = 1.0;
    int control_count = 21;
    MZeroSpec m0;
};

// Known template names, for config validation messages.
const std::vector<std::string>& builtin_template_names();

// Builds the model, computes its invariant box and speed bound on the given
// grid and fills the Lipschitz ledger from them.
Model build_model(const ModelSpec& spec, const TimeGrid& grid);

}  // namespace mfg

#endif
