// Basic geometric building blocks: points, axis-aligned boxes, the uniform
// time grid and the tensor-lattice state grid with multilinear interpolation.
#ifndef MFG_GEOMETRY_HPP
#define MFG_GEOMETRY_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mfg {

using Vec = std::vector<double>;

inline double sq_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline double norm(std::span<const double> v) { return std::sqrt(sq_norm(v)); }

inline double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Axis-aligned box in R^n.
struct Box {
    Vec lo, hi;

    int dim() const { return static_cast<int>(lo.size()); }

    bool contains(std::span<const double> x, double slack = 0.0) const {
        for (std::size_t d = 0; d < lo.size(); ++d)
            if (x[d] < lo[d] - slack || x[d] > hi[d] + slack) return false;
        return true;
    }

    // Euclidean diameter (corner to corner).
    double diameter() const {
        double s = 0.0;
        for (std::size_t d = 0; d < lo.size(); ++d) {
            double e = hi[d] - lo[d];
            s += e * e;
        }
        return std::sqrt(s);
    }

    Box inflated(double factor) const {
        Box b = *this;
        for (std::size_t d = 0; d < lo.size(); ++d) {
            double c = 0.5 * (lo[d] + hi[d]);
            double h = 0.5 * (hi[d] - lo[d]) * factor;
            b.lo[d] = c - h;
            b.hi[d] = c + h;
        }
        return b;
    }

    Box expanded(double margin) const {
        Box b = *this;
        for (std::size_t d = 0; d < lo.size(); ++d) {
            b.lo[d] -= margin;
            b.hi[d] += margin;
        }
        return b;
    }
};

// Uniform grid on [0, T] with nodes t_k = k T / steps.
struct TimeGrid {
    double T = 1.0;
    int steps = 1;

    TimeGrid() = default;
    TimeGrid(double horizon, int n_steps) : T(horizon), steps(n_steps) {
        if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
        if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
    }

    double dt() const { return T / steps; }
    int nodes() const { return steps + 1; }
    double node(int k) const { return k * T / steps; }

    bool operator==(const TimeGrid& o) const { return T == o.T && steps == o.steps; }
};

// Tensor lattice over a box; counts[d] >= 2 nodes per axis.
class StateGrid {
public:
    StateGrid() = default;
    StateGrid(Box box, std::vector<int> counts) : box_(std::move(box)), counts_(std::move(counts)) {
        if (static_cast<int>(counts_.size()) != box_.dim())
            throw std::invalid_argument("StateGrid: counts/box dimension mismatch");
        total_ = 1;
        for (int c : counts_) {
            if (c < 2) throw std::invalid_argument("StateGrid: need >= 2 nodes per axis");
            total_ *= static_cast<std::size_t>(c);
        }
        step_.resize(counts_.size());
        for (std::size_t d = 0; d < counts_.size(); ++d)
            step_[d] = (box_.hi[d] - box_.lo[d]) / (counts_[d] - 1);
    }

    int dim() const { return box_.dim(); }
    const Box& box() const { return box_; }
    const std::vector<int>& counts() const { return counts_; }
    double step(int d) const { return step_[d]; }
    std::size_t total_nodes() const { return total_; }

    // Largest axis step, used in consistency estimates.
    double max_step() const {
        double h = 0.0;
        for (double s : step_) h = std::max(h, s);
        return h;
    }

    void node_coords(std::size_t flat, std::span<double> out) const {
        for (int d = dim() - 1; d >= 0; --d) {
            std::size_t c = static_cast<std::size_t>(counts_[d]);
            out[d] = box_.lo[d] + static_cast<double>(flat % c) * step_[d];
            flat /= c;
        }
    }

    // Multilinear interpolation of nodal data at x.  Feet slightly outside the
    // box are extrapolated linearly; beyond max_out the caller's grid is too
    // small and we throw.
    double interpolate(std::span<const double> values, std::span<const double> x,
                       double max_out) const {
        int n = dim();
        // per-axis cell index and local coordinate
        std::size_t base = 0;
        double frac[8];
        std::size_t ax_stride[8];
        std::size_t stride = 1;
        for (int d = n - 1; d >= 0; --d) {
            ax_stride[d] = stride;
            stride *= static_cast<std::size_t>(counts_[d]);
        }
        for (int d = 0; d < n; ++d) {
            double out_lo = box_.lo[d] - x[d];
            double out_hi = x[d] - box_.hi[d];
            if (out_lo > max_out || out_hi > max_out)
                throw std::runtime_error("state grid too small");
            double s = (x[d] - box_.lo[d]) / step_[d];
            int c = static_cast<int>(std::floor(s));
            c = std::max(0, std::min(c, counts_[d] - 2));
            frac[d] = s - c;  // may fall outside [0,1]: linear extrapolation
            base += static_cast<std::size_t>(c) * ax_stride[d];
        }
        double acc = 0.0;
        for (unsigned corner = 0; corner < (1u << n); ++corner) {
            double w = 1.0;
            std::size_t idx = base;
            for (int d = 0; d < n; ++d) {
                if (corner & (1u << d)) {
                    w *= frac[d];
                    idx += ax_stride[d];
                } else {
                    w *= 1.0 - frac[d];
                }
            }
            acc += w * values[idx];
        }
        return acc;
    }

private:
    Box box_;
    std::vector<int> counts_;
    std::vector<double> step_;
    std::size_t total_ = 0;
};

}  // namespace mfg

#endif
