#include "gridmdp/grid.hpp"

#include <cmath>
#include <sstream>

namespace gridmdp {

// Tolerance in index units: absorbs FP error of (ub-lb)/eta for counts like
// 0.6/0.1, which lands one ulp below the exact integer.
static constexpr double kIndexTol = 1e-9;

UniformGrid make_grid(const Vector& lb, const Vector& ub, const Vector& eta) {
    if (lb.size() != ub.size() || lb.size() != eta.size())
        throw ConfigError("make_grid: lb/ub/eta dimension mismatch");
    UniformGrid g;
    g.lb_ = lb;
    g.ub_ = ub;
    g.eta_ = eta;
    const int d = static_cast<int>(lb.size());
    g.counts_.resize(static_cast<std::size_t>(d));
    g.strides_.resize(static_cast<std::size_t>(d));
    g.total_ = 1;
    for (int i = 0; i < d; ++i) {
        if (!(eta[i] > 0.0)) {
            std::ostringstream os;
            os << "make_grid: eta[" << i << "] = " << eta[i] << " must be positive";
            throw ConfigError(os.str());
        }
        if (lb[i] > ub[i]) {
            std::ostringstream os;
            os << "make_grid: lb[" << i << "] = " << lb[i] << " exceeds ub[" << i << "] = " << ub[i];
            throw ConfigError(os.str());
        }
        const double q = (ub[i] - lb[i]) / eta[i];
        g.counts_[static_cast<std::size_t>(i)] = static_cast<Index>(std::floor(q + kIndexTol)) + 1;
        g.total_ = checked_mul(static_cast<std::uint64_t>(g.total_),
                               static_cast<std::uint64_t>(g.counts_[static_cast<std::size_t>(i)]),
                               "make_grid");
    }
    for (int i = d - 1; i >= 0; --i) {
        g.strides_[static_cast<std::size_t>(i)] =
            (i == d - 1) ? 1 : g.strides_[static_cast<std::size_t>(i + 1)] * g.counts_[static_cast<std::size_t>(i + 1)];
    }
    return g;
}

void index_to_multi(const UniformGrid& g, Index i, IndexVec& multi) {
    multi.resize(static_cast<std::size_t>(g.dim()));
    for (int d = 0; d < g.dim(); ++d) {
        multi[static_cast<std::size_t>(d)] = i / g.stride(d);
        i %= g.stride(d);
    }
}

Vector index_to_point(const UniformGrid& g, Index i) {
    if (i < 0 || i >= g.size())
        throw std::out_of_range("index_to_point: flat index " + std::to_string(i) + " out of range");
    Vector p(g.dim());
    for (int d = 0; d < g.dim(); ++d) {
        const Index j = i / g.stride(d);
        i %= g.stride(d);
        p[d] = g.lb()[d] + static_cast<double>(j) * g.eta()[d];
    }
    return p;
}

bool contains(const UniformGrid& g, const Vector& x) {
    if (x.size() != g.dim()) return false;
    for (int d = 0; d < g.dim(); ++d) {
        const double t = (x[d] - g.lb()[d]) / g.eta()[d];
        if (t < -0.5 - kIndexTol || t > static_cast<double>(g.count(d) - 1) + 0.5 + kIndexTol)
            return false;
    }
    return true;
}

Index point_to_index(const UniformGrid& g, const Vector& x) {
    if (x.size() != g.dim())
        throw std::out_of_range("point_to_index: point dimension mismatch");
    Index flat = 0;
    for (int d = 0; d < g.dim(); ++d) {
        const double t = (x[d] - g.lb()[d]) / g.eta()[d];
        if (t < -0.5 - kIndexTol || t > static_cast<double>(g.count(d) - 1) + 0.5 + kIndexTol) {
            std::ostringstream os;
            os << "point_to_index: coordinate " << x[d] << " of axis " << d
               << " lies outside the quantized region";
            throw std::out_of_range(os.str());
        }
        // nearest representative, ties toward +inf
        Index j = static_cast<Index>(std::floor(t + 0.5));
        if (j < 0) j = 0;
        if (j >= g.count(d)) j = g.count(d) - 1;
        flat += j * g.stride(d);
    }
    return flat;
}

Box cell_bounds(const UniformGrid& g, Index i) {
    const Vector p = index_to_point(g, i);
    return Box(p - g.eta() / 2.0, p + g.eta() / 2.0);
}

IndexWindow window(const UniformGrid& g, const Vector& center, const Vector& radius) {
    if (center.size() != g.dim() || radius.size() != g.dim())
        throw ConfigError("window: center/radius dimension mismatch");
    IndexWindow w;
    w.lo.resize(static_cast<std::size_t>(g.dim()));
    w.hi.resize(static_cast<std::size_t>(g.dim()));
    for (int d = 0; d < g.dim(); ++d) {
        if (radius[d] < 0.0)
            throw ConfigError("window: negative radius");
        const double tlo = (center[d] - radius[d] - g.lb()[d]) / g.eta()[d];
        const double thi = (center[d] + radius[d] - g.lb()[d]) / g.eta()[d];
        Index lo = static_cast<Index>(std::ceil(tlo - kIndexTol));
        Index hi = static_cast<Index>(std::floor(thi + kIndexTol));
        if (lo < 0) lo = 0;
        if (hi > g.count(d) - 1) hi = g.count(d) - 1;
        w.lo[static_cast<std::size_t>(d)] = lo;
        w.hi[static_cast<std::size_t>(d)] = hi;
        if (lo > hi) { // empty on one axis -> empty window
            w.lo.assign(static_cast<std::size_t>(g.dim()), 0);
            w.hi.assign(static_cast<std::size_t>(g.dim()), -1);
            return w;
        }
    }
    return w;
}

IndexVec IndexWindow::flat_indices(const UniformGrid& g) const {
    IndexVec out;
    if (empty()) return out;
    out.reserve(static_cast<std::size_t>(size()));
    IndexVec cur = lo;
    const int d = static_cast<int>(lo.size());
    for (;;) {
        Index flat = 0;
        for (int k = 0; k < d; ++k) flat += cur[static_cast<std::size_t>(k)] * g.stride(k);
        out.push_back(flat);
        int k = d - 1;
        for (; k >= 0; --k) {
            if (++cur[static_cast<std::size_t>(k)] <= hi[static_cast<std::size_t>(k)]) break;
            cur[static_cast<std::size_t>(k)] = lo[static_cast<std::size_t>(k)];
        }
        if (k < 0) break;
    }
    return out;
}

} // namespace gridmdp
