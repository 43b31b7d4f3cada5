#pragma once

#include "gridmdp/common.hpp"

#include <vector>

namespace gridmdp {

/// Uniform quantization of a hyper-rectangle.
///
/// Axis i carries count_i = floor((ub_i - lb_i)/eta_i) + 1 representative
/// points lb_i, lb_i + eta_i, ..., each owning the half-open cell of width
/// eta_i centered on it (edge cells are not clipped, so all cells have the
/// same measure). Flat indices are the row-major mixed-radix encoding of the
/// per-axis indices, last axis fastest. Immutable; all operations reentrant.
class UniformGrid {
public:
    /// Zero-dimensional grid: a single point (the empty vector).
    UniformGrid() : total_(1) {}

    int dim() const { return static_cast<int>(lb_.size()); }
    const Vector& lb() const { return lb_; }
    const Vector& ub() const { return ub_; }
    const Vector& eta() const { return eta_; }
    Index count(int d) const { return counts_[static_cast<std::size_t>(d)]; }
    const IndexVec& counts() const { return counts_; }
    /// Row-major stride of axis d (product of counts of later axes).
    Index stride(int d) const { return strides_[static_cast<std::size_t>(d)]; }
    /// Total number of representative points.
    Index size() const { return total_; }

    /// The state discretization parameter: max_i eta_i (0 for dim-0 grids).
    double delta() const { return dim() == 0 ? 0.0 : eta_.maxCoeff(); }

    bool operator==(const UniformGrid& o) const {
        return lb_ == o.lb_ && ub_ == o.ub_ && eta_ == o.eta_;
    }

    friend UniformGrid make_grid(const Vector& lb, const Vector& ub, const Vector& eta);

private:
    Vector lb_, ub_, eta_;
    IndexVec counts_;
    IndexVec strides_;
    Index total_ = 1;
};

/// Rectangular set of grid indices: inclusive per-axis ranges [lo_d, hi_d].
/// Empty when any lo_d > hi_d. Iterated in row-major order (last axis fastest).
struct IndexWindow {
    IndexVec lo;
    IndexVec hi;

    bool empty() const {
        for (std::size_t d = 0; d < lo.size(); ++d)
            if (lo[d] > hi[d]) return true;
        return false;
    }
    Index extent(int d) const {
        Index e = hi[static_cast<std::size_t>(d)] - lo[static_cast<std::size_t>(d)] + 1;
        return e > 0 ? e : 0;
    }
    Index size() const {
        Index n = 1;
        for (std::size_t d = 0; d < lo.size(); ++d) {
            if (lo[d] > hi[d]) return 0;
            n *= hi[d] - lo[d] + 1;
        }
        return n;
    }
    /// Flat grid indices of the window in row-major order.
    IndexVec flat_indices(const UniformGrid& g) const;
};

/// Validates bounds and builds the grid. Throws ConfigError on lb > ub or eta <= 0.
UniformGrid make_grid(const Vector& lb, const Vector& ub, const Vector& eta);

/// Representative point of flat index i. Throws std::out_of_range.
Vector index_to_point(const UniformGrid& g, Index i);

/// Decodes a flat index into per-axis indices (row-major).
void index_to_multi(const UniformGrid& g, Index i, IndexVec& multi);

/// Flat index of the representative nearest to x (ties round toward +inf).
/// x must lie in the quantized region [lb - eta/2, last_rep + eta/2] per axis;
/// throws std::out_of_range otherwise.
Index point_to_index(const UniformGrid& g, const Vector& x);

/// True when x lies in the quantized region handled by point_to_index.
bool contains(const UniformGrid& g, const Vector& x);

/// The cell of representative i: [p - eta/2, p + eta/2].
Box cell_bounds(const UniformGrid& g, Index i);

/// Indices whose representatives lie in [center - radius, center + radius],
/// clipped to the grid. May be empty.
IndexWindow window(const UniformGrid& g, const Vector& center, const Vector& radius);

} // namespace gridmdp
