#pragma once

#include "gridmdp/model.hpp"
#include "gridmdp/spec.hpp"

#include <Eigen/Core>

namespace gridmdp {

/// One target-hit probability per (state, input, disturbance) row.
using TargetHitVector = Eigen::ArrayXd;

/// Fixed-width row storage of the quantized transition kernel.
///
/// Row (ix, iu, iw) — mixed radix, disturbance fastest — stores the masses of
/// the post-state cells inside its cutting window: a slab of uniform per-axis
/// extents W_d anchored at a per-row origin (flat state index), clamped into
/// the state grid. W_d is sized so the slab covers every cell intersecting
/// [mu - x*, mu + x*] for any alignment of mu, hence any in-grid cell outside
/// the slab has mass at most gamma * prod(eta). Mass falling outside the state
/// grid is dropped, not renormalized.
class TransitionMatrix {
public:
    Index rows() const { return rows_; }
    /// Uniform row width R = prod_d W_d.
    Index row_width() const { return row_width_; }
    /// Per-axis slab extents W_d.
    const IndexVec& window_extents() const { return extents_; }
    /// Flat state index of the slab corner of one row.
    Index origin(Index row) const { return origins_[row]; }

    const double* row(Index r) const { return probs_.data() + r * row_width_; }
    double* row(Index r) { return probs_.data() + r * row_width_; }
    double row_sum(Index r) const {
        return Eigen::Map<const Eigen::ArrayXd>(row(r), row_width_).sum();
    }

    /// Dense lookup: stored probability of post-state `post` in row `r`,
    /// 0 when the post state lies outside the row's window.
    double prob(Index r, Index post) const;

    const UniformGrid& state_grid() const { return state_; }
    Index n_inputs() const { return n_inputs_; }
    Index n_disturbances() const { return n_dist_; }
    Index row_index(Index ix, Index iu, Index iw) const {
        return (ix * n_inputs_ + iu) * n_dist_ + iw;
    }

    const Eigen::ArrayXd& payload() const { return probs_; }
    Eigen::ArrayXd& payload() { return probs_; }
    const Eigen::Array<Index, Eigen::Dynamic, 1>& origins() const { return origins_; }

    friend TransitionMatrix build_matrix(const SystemModel& m, int threads);
    friend TransitionMatrix read_matrix(const std::string& path);

private:
    UniformGrid state_;
    Index n_inputs_ = 0;
    Index n_dist_ = 0;
    Index rows_ = 0;
    Index row_width_ = 0;
    IndexVec extents_;
    Eigen::Array<Index, Eigen::Dynamic, 1> origins_;
    Eigen::ArrayXd probs_;
};

/// Per-axis slab extents of the cutting window for this model's noise
/// (the full axis when cutting is disabled, a single cell when gamma is at or
/// above the density peak).
IndexVec window_extents(const SystemModel& m);

/// Evaluates one row of the kernel: the noise-free image mu, the slab origin,
/// the slab cell masses, and target masses. One instance per thread; reused
/// across rows. Shared by the stored-matrix builder and the on-the-fly
/// synthesis path so both produce identical floating-point results.
class RowKernel {
public:
    explicit RowKernel(const SystemModel& m);

    const IndexVec& extents() const { return extents_; }
    Index row_width() const { return row_width_; }

    /// Decodes the triple, evaluates the dynamics and anchors the slab.
    /// Expression domain errors are rethrown naming (x, nu, w).
    void compute(Index ix, Index iu, Index iw);

    const Vector& mu() const { return mu_; }
    const Vector& x() const { return x_; }
    Index origin_flat() const;
    const IndexVec& origin() const { return origin_; }

    /// Writes the row_width() slab masses in row-major order.
    void fill_row(double* out) const;

    /// P(post state lands in `box`) for the current triple (exact CDF product).
    double box_mass(const Box& box) const;

private:
    const SystemModel* model_;
    IndexVec extents_;
    Index row_width_ = 0;
    bool degenerate_ = false; // gamma at/above peak: single-cell window
    std::optional<Vector> radius_;
    Vector x_, u_, w_, mu_;
    IndexVec origin_;
    mutable std::vector<std::vector<double>> axis_mass_; // per-dim slab masses
    void fill_axis_masses() const;
};

/// Builds the transition kernel, parallel over (state, input) pairs with the
/// disturbance loop inside each task. Deterministic for any thread count.
TransitionMatrix build_matrix(const SystemModel& m, int threads = 0);

/// Mass of the one-step successor distribution landing in the target box,
/// integrated exactly over the box per row; zero by convention for rows whose
/// state lies in T or A.
TargetHitVector build_target_hit(const SystemModel& m, const Spec& spec, int threads = 0);

/// Zeroes stored probabilities whose post-state representative lies in T or A.
/// Idempotent. Returns the matrix for chaining.
TransitionMatrix& mask_absorbing(TransitionMatrix& tm, const Spec& spec, int threads = 0);

/// Bytes the stored kernel would need (payload + per-row origins + container
/// overhead), computed without allocating. Throws MemoryError on overflow.
std::uint64_t memory_estimate(const SystemModel& m);

namespace detail {

/// Visits the slab in row-major order: f(slab_offset, post_flat_index).
template <class F>
void visit_slab(const UniformGrid& g, const IndexVec& extents, const IndexVec& origin, F&& f) {
    const int n = static_cast<int>(extents.size());
    IndexVec j(static_cast<std::size_t>(n), 0);
    Index flat = 0;
    for (int d = 0; d < n; ++d) flat += origin[static_cast<std::size_t>(d)] * g.stride(d);
    Index k = 0;
    for (;;) {
        f(k, flat);
        ++k;
        int d = n - 1;
        for (; d >= 0; --d) {
            flat += g.stride(d);
            if (++j[static_cast<std::size_t>(d)] < extents[static_cast<std::size_t>(d)]) break;
            flat -= extents[static_cast<std::size_t>(d)] * g.stride(d);
            j[static_cast<std::size_t>(d)] = 0;
        }
        if (d < 0) break;
    }
}

} // namespace detail

} // namespace gridmdp
