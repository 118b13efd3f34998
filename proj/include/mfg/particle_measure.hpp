// Finitely supported probability measures (weighted atoms) and time-indexed
// flows of them.  Atoms are stored flat (count x dim) for cache-friendly
// kernels; coincident atoms are allowed and only merged where an operation
// says so.
#ifndef MFG_PARTICLE_MEASURE_HPP
#define MFG_PARTICLE_MEASURE_HPP

#include <span>
#include <stdexcept>
#include <vector>

#include "mfg/geometry.hpp"

namespace mfg {

inline constexpr double kWeightSumTol = 1e-12;

class ParticleMeasure {
public:
    ParticleMeasure() = default;

    // points: count*dim row-major, weights: count.  Zero-weight atoms are
    // dropped; negative weights and a weight sum off 1 by more than 1e-12
    // are rejected.
    ParticleMeasure(int dim, std::vector<double> points, std::vector<double> weights)
        : dim_(dim) {
        if (dim_ < 1) throw std::invalid_argument("ParticleMeasure: dimension must be >= 1");
        if (weights.empty()) throw std::invalid_argument("ParticleMeasure: no atoms");
        if (points.size() != weights.size() * static_cast<std::size_t>(dim_))
            throw std::invalid_argument("ParticleMeasure: points/weights size mismatch");
        double sum = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw std::invalid_argument("ParticleMeasure: negative weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > kWeightSumTol)
            throw std::invalid_argument("ParticleMeasure: weights must sum to 1");
        points_.reserve(points.size());
        weights_.reserve(weights.size());
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] == 0.0) continue;
            weights_.push_back(weights[i]);
            for (int d = 0; d < dim_; ++d)
                points_.push_back(points[i * dim_ + d]);
        }
        if (weights_.empty()) throw std::invalid_argument("ParticleMeasure: all weights zero");
    }

    static ParticleMeasure dirac(Vec x) {
        int n = static_cast<int>(x.size());
        return ParticleMeasure(n, std::move(x), {1.0});
    }

    // Rescales weights to sum exactly to 1; used after float-drifting ops.
    static ParticleMeasure normalized(int dim, std::vector<double> points,
                                      std::vector<double> weights) {
        double sum = 0.0;
        for (double w : weights) sum += w;
        if (!(sum > 0.0)) throw std::invalid_argument("ParticleMeasure: nonpositive total mass");
        for (double& w : weights) w /= sum;
        return ParticleMeasure(dim, std::move(points), std::move(weights));
    }

    int dim() const { return dim_; }
    std::size_t size() const { return weights_.size(); }
    std::span<const double> point(std::size_t i) const {
        return {points_.data() + i * dim_, static_cast<std::size_t>(dim_)};
    }
    double weight(std::size_t i) const { return weights_[i]; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& raw_points() const { return points_; }

    double total_mass() const {
        double s = 0.0;
        for (double w : weights_) s += w;
        return s;
    }

    Box bounding_box() const {
        Box b{Vec(dim_), Vec(dim_)};
        for (int d = 0; d < dim_; ++d) b.lo[d] = b.hi[d] = points_[d];
        for (std::size_t i = 1; i < size(); ++i)
            for (int d = 0; d < dim_; ++d) {
                double v = points_[i * dim_ + d];
                if (v < b.lo[d]) b.lo[d] = v;
                if (v > b.hi[d]) b.hi[d] = v;
            }
        return b;
    }

    // Integral of x against the measure (barycenter).
    Vec mean() const {
        Vec m(dim_, 0.0);
        for (std::size_t i = 0; i < size(); ++i)
            for (int d = 0; d < dim_; ++d) m[d] += weights_[i] * points_[i * dim_ + d];
        return m;
    }

private:
    int dim_ = 0;
    std::vector<double> points_;
    std::vector<double> weights_;
};

// A snapshot per node of a TimeGrid.
struct MeasureFlow {
    TimeGrid grid;
    std::vector<ParticleMeasure> snapshots;

    MeasureFlow() = default;
    MeasureFlow(TimeGrid g, std::vector<ParticleMeasure> snaps)
        : grid(g), snapshots(std::move(snaps)) {
        if (static_cast<int>(snapshots.size()) != grid.nodes())
            throw std::invalid_argument("MeasureFlow: snapshot count must match grid nodes");
        int n = snapshots.front().dim();
        for (const auto& s : snapshots)
            if (s.dim() != n) throw std::invalid_argument("MeasureFlow: mixed dimensions");
    }

    int dim() const { return snapshots.front().dim(); }

    // Constant-in-time flow pinned at m.
    static MeasureFlow frozen(const TimeGrid& g, const ParticleMeasure& m) {
        return MeasureFlow(g, std::vector<ParticleMeasure>(g.nodes(), m));
    }
};

}  // namespace mfg

#endif
