#include "mfg/templates.hpp"

#include <cmath>
#include <stdexcept>

namespace mfg {

namespace {

double get_param(const std::map<std::string, double>& params, const std::string& key,
                 double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

std::vector<Vec> control_grid(const ModelSpec& spec) {
    if (spec.control_count < 1)
        throw std::invalid_argument("model.controls.count: must be >= 1");
    std::vector<Vec> us;
    us.reserve(spec.control_count);
    if (spec.control_count == 1) {
        us.push_back({0.5 * (spec.control_lo + spec.control_hi)});
        return us;
    }
    for (int i = 0; i < spec.control_count; ++i)
        us.push_back({spec.control_lo +
                      (spec.control_hi - spec.control_lo) * i / (spec.control_count - 1)});
    return us;
}

double sup_abs_dev(const Box& G, double target) {
    return std::max(std::abs(G.lo[0] - target), std::abs(G.hi[0] - target));
}

}  // namespace

ParticleMeasure MZeroSpec::build() const {
    if (kind == Kind::Grid) {
        if (count < 1) throw std::invalid_argument("model.m0.count: must be >= 1");
        if (!(hi >= lo)) throw std::invalid_argument("model.m0: hi must be >= lo");
        std::vector<double> pts(count), ws(count, 1.0 / count);
        for (int i = 0; i < count; ++i)
            pts[i] = lo + (hi - lo) * (i + 0.5) / count;
        return ParticleMeasure(1, std::move(pts), std::move(ws));
    }
    if (atoms.empty()) throw std::invalid_argument("model.m0.atoms: empty");
    int n = static_cast<int>(atoms.front().size());
    std::vector<double> pts, ws = weights;
    for (const Vec& a : atoms) pts.insert(pts.end(), a.begin(), a.end());
    if (ws.empty()) ws.assign(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
    return ParticleMeasure(n, std::move(pts), std::move(ws));
}

const std::vector<std::string>& builtin_template_names() {
    static const std::vector<std::string> names = {"uncoupled", "lq1d", "congestion1d"};
    return names;
}

Model build_model(const ModelSpec& spec, const TimeGrid& grid) {
    Model model;
    model.name = spec.template_name;
    model.dim = 1;
    model.horizon = grid.T;
    model.control_set = control_grid(spec);
    model.m0 = spec.m0.build();
    if (model.m0.dim() != 1)
        throw std::invalid_argument("built-in templates are one-dimensional");

    const double c = get_param(spec.params, "c", 0.1);
    const double x_target = get_param(spec.params, "x_target", 0.3);

    // all templates drive with f = u
    model.drift = [](double, std::span<const double>, std::span<const double>,
                     std::span<const double> u, std::span<double> out) { out[0] = u[0]; };
    model.terminal_value = [x_target](std::span<const double> x, std::span<const double>) {
        double d = x[0] - x_target;
        return -d * d;
    };

    if (spec.template_name == "uncoupled") {
        model.stat_dim = 0;
        model.running_cost = [](double, std::span<const double>, std::span<const double>,
                                std::span<const double> u) { return 0.5 * u[0] * u[0]; };
    } else if (spec.template_name == "lq1d") {
        model.stat_dim = 1;  // barycenter
        model.measure_stats = [](double, const ParticleMeasure& m, std::span<double> out) {
            out[0] = m.mean()[0];
        };
        model.running_cost = [c](double, std::span<const double> x,
                                 std::span<const double> stats, std::span<const double> u) {
            double d = x[0] - stats[0];
            return 0.5 * u[0] * u[0] + c * d * d;
        };
    } else if (spec.template_name == "congestion1d") {
        const double h = get_param(spec.params, "bandwidth", 0.15);
        if (!(h > 0.0)) throw std::invalid_argument("model.params.bandwidth: must be > 0");
        const int cells = static_cast<int>(get_param(spec.params, "kde_cells", 129));
        if (cells < 2) throw std::invalid_argument("model.params.kde_cells: must be >= 2");

        // lattice covering everything reachable plus kernel tails
        Box m0box = model.m0.bounding_box();
        double u_max = 0.0;
        for (const Vec& u : model.control_set) u_max = std::max(u_max, std::abs(u[0]));
        double margin = 1.5 * grid.T * u_max + 4.0 * h;
        const double lat_lo = m0box.lo[0] - margin, lat_hi = m0box.hi[0] + margin;
        const double lat_step = (lat_hi - lat_lo) / (cells - 1);
        const double kern_scale = 1.0 / (std::sqrt(2.0 * M_PI) * h);

        model.stat_dim = cells;  // kernel density on the lattice
        model.measure_stats = [lat_lo, lat_step, cells, h, kern_scale](
                                  double, const ParticleMeasure& m, std::span<double> out) {
            for (int i = 0; i < cells; ++i) {
                double xi = lat_lo + i * lat_step;
                double rho = 0.0;
                for (std::size_t a = 0; a < m.size(); ++a) {
                    double d = (xi - m.point(a)[0]) / h;
                    rho += m.weight(a) * std::exp(-0.5 * d * d);
                }
                out[i] = rho * kern_scale;
            }
        };
        model.running_cost = [c, lat_lo, lat_step, cells](
                                 double, std::span<const double> x,
                                 std::span<const double> stats, std::span<const double> u) {
            double s = (x[0] - lat_lo) / lat_step;
            int cell = static_cast<int>(std::floor(s));
            cell = std::max(0, std::min(cell, cells - 2));
            double frac = std::min(1.0, std::max(0.0, s - cell));  // clamp: flat tails
            double rho = stats[cell] + frac * (stats[cell + 1] - stats[cell]);
            return 0.5 * u[0] * u[0] + c * rho;
        };
        model.lipschitz.L_gx = c * std::exp(-0.5) / (std::sqrt(2.0 * M_PI) * h * h);
        model.lipschitz.L_gm = model.lipschitz.L_gx;
    } else {
        throw std::invalid_argument("unknown model template '" + spec.template_name + "'");
    }

    DomainBounds bounds = bound_box_and_K(model, grid);

    // fill the remaining ledger entries from the computed box
    const Box& G = bounds.G;
    if (spec.template_name == "lq1d") {
        double diam = G.hi[0] - G.lo[0];
        model.lipschitz.L_gx = 2.0 * c * diam;
        model.lipschitz.L_gm = 2.0 * c * diam;
    }
    model.lipschitz.L_sx = 2.0 * sup_abs_dev(G, x_target);
    model.lipschitz.L_sm = 0.0;
    model.bounds = bounds;
    model.validate();
    return model;
}

}  // namespace mfg
