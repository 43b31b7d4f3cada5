#include "gridmdp/abstraction.hpp"

#include "gridmdp/parallel.hpp"

#include <cmath>
#include <sstream>

namespace gridmdp {

static constexpr double kIndexTol = 1e-9;

// ---------------------------------------------------------------------------
// window sizing
// ---------------------------------------------------------------------------

IndexVec window_extents(const SystemModel& m) {
    const UniformGrid& g = m.state;
    const int n = g.dim();
    IndexVec w(static_cast<std::size_t>(n));
    const auto radius = cutting_radius(m.noise);
    for (int d = 0; d < n; ++d) {
        if (!radius) {
            w[static_cast<std::size_t>(d)] = g.count(d); // cutting disabled: full rows
        } else if ((*radius)[d] == 0.0) {
            w[static_cast<std::size_t>(d)] = 1; // gamma at/above the peak
        } else {
            // max representatives covered by [mu - x* - eta/2, mu + x* + eta/2]
            const Index cap = static_cast<Index>(
                                  std::floor(2.0 * (*radius)[d] / g.eta()[d] + 1.0 + kIndexTol)) +
                              1;
            w[static_cast<std::size_t>(d)] = std::min(g.count(d), cap);
        }
    }
    return w;
}

std::uint64_t memory_estimate(const SystemModel& m) {
    const IndexVec w = window_extents(m);
    std::uint64_t width = 1;
    for (Index e : w) width = checked_mul(width, static_cast<std::uint64_t>(e), "memory_estimate");
    const std::uint64_t rows = static_cast<std::uint64_t>(m.n_rows());
    const std::uint64_t payload = checked_mul(checked_mul(rows, width, "memory_estimate"),
                                              8ULL, "memory_estimate");
    const std::uint64_t origins = checked_mul(rows, 8ULL, "memory_estimate");
    if (payload > UINT64_MAX - origins - 4096ULL)
        throw MemoryError("memory_estimate: size arithmetic overflows 64 bits");
    return payload + origins + 4096ULL; // payload + origins + container overhead
}

// ---------------------------------------------------------------------------
// RowKernel
// ---------------------------------------------------------------------------

RowKernel::RowKernel(const SystemModel& m)
    : model_(&m),
      extents_(window_extents(m)),
      radius_(cutting_radius(m.noise)),
      x_(m.state.dim()),
      u_(m.input.dim()),
      w_(m.disturbance.dim()),
      mu_(m.state.dim()),
      origin_(static_cast<std::size_t>(m.state.dim()), 0),
      axis_mass_(static_cast<std::size_t>(m.state.dim())) {
    row_width_ = 1;
    for (std::size_t d = 0; d < extents_.size(); ++d) {
        row_width_ *= extents_[d];
        axis_mass_[d].resize(static_cast<std::size_t>(extents_[d]));
    }
    degenerate_ = radius_ && radius_->size() > 0 && (*radius_)[0] == 0.0;
}

void RowKernel::compute(Index ix, Index iu, Index iw) {
    const SystemModel& m = *model_;
    Index rem = ix;
    for (int d = 0; d < m.state.dim(); ++d) {
        const Index j = rem / m.state.stride(d);
        rem %= m.state.stride(d);
        x_[d] = m.state.lb()[d] + static_cast<double>(j) * m.state.eta()[d];
    }
    rem = iu;
    for (int d = 0; d < m.input.dim(); ++d) {
        const Index j = rem / m.input.stride(d);
        rem %= m.input.stride(d);
        u_[d] = m.input.lb()[d] + static_cast<double>(j) * m.input.eta()[d];
    }
    rem = iw;
    for (int d = 0; d < m.disturbance.dim(); ++d) {
        const Index j = rem / m.disturbance.stride(d);
        rem %= m.disturbance.stride(d);
        w_[d] = m.disturbance.lb()[d] + static_cast<double>(j) * m.disturbance.eta()[d];
    }

    try {
        for (int i = 0; i < m.state_dim(); ++i)
            mu_[i] = eval(m.dynamics[static_cast<std::size_t>(i)], x_.data(), u_.data(), w_.data());
    } catch (const DomainError& err) {
        std::ostringstream os;
        os << err.what() << " at (x=[" << x_.transpose() << "], nu=[" << u_.transpose()
           << "], w=[" << w_.transpose() << "])";
        throw DomainError(os.str());
    }

    const UniformGrid& g = m.state;
    for (int d = 0; d < g.dim(); ++d) {
        const Index W = extents_[static_cast<std::size_t>(d)];
        Index o;
        if (!radius_) {
            o = 0;
        } else if (degenerate_) {
            const double t = (mu_[d] - g.lb()[d]) / g.eta()[d];
            o = static_cast<Index>(std::floor(t + 0.5));
        } else {
            const double t =
                (mu_[d] - (*radius_)[d] - 0.5 * g.eta()[d] - g.lb()[d]) / g.eta()[d];
            o = static_cast<Index>(std::ceil(t - kIndexTol));
        }
        if (o < 0) o = 0;
        if (o > g.count(d) - W) o = g.count(d) - W;
        origin_[static_cast<std::size_t>(d)] = o;
    }
}

Index RowKernel::origin_flat() const {
    Index flat = 0;
    for (int d = 0; d < model_->state.dim(); ++d)
        flat += origin_[static_cast<std::size_t>(d)] * model_->state.stride(d);
    return flat;
}

void RowKernel::fill_axis_masses() const {
    const SystemModel& m = *model_;
    const UniformGrid& g = m.state;
    const bool mult = m.noise.mode() == NoiseMode::multiplicative;
    for (int d = 0; d < g.dim(); ++d) {
        const double scale = mult ? x_[d] : 1.0;
        const double half = 0.5 * g.eta()[d];
        std::vector<double>& md = axis_mass_[static_cast<std::size_t>(d)];
        for (Index t = 0; t < extents_[static_cast<std::size_t>(d)]; ++t) {
            const double rep =
                g.lb()[d] +
                static_cast<double>(origin_[static_cast<std::size_t>(d)] + t) * g.eta()[d];
            md[static_cast<std::size_t>(t)] =
                m.noise.axis_transformed_mass(d, rep - half, rep + half, mu_[d], scale);
        }
    }
}

namespace {
// writes prod over remaining axes into contiguous row-major blocks
double* fill_product(const std::vector<std::vector<double>>& axis, int d, int n, double acc,
                     double* out) {
    const std::vector<double>& md = axis[static_cast<std::size_t>(d)];
    if (d == n - 1) {
        for (double v : md) *out++ = acc * v;
        return out;
    }
    for (double v : md) out = fill_product(axis, d + 1, n, acc * v, out);
    return out;
}
} // namespace

void RowKernel::fill_row(double* out) const {
    const SystemModel& m = *model_;
    if (m.noise.family() == NoiseFamily::custom) {
        // no per-axis factorization: integrate each cell of the slab
        const UniformGrid& g = m.state;
        Box cell(Vector(g.dim()), Vector(g.dim()));
        detail::visit_slab(g, extents_, origin_, [&](Index k, Index flat) {
            Index rem = flat;
            for (int d = 0; d < g.dim(); ++d) {
                const Index j = rem / g.stride(d);
                rem %= g.stride(d);
                const double rep = g.lb()[d] + static_cast<double>(j) * g.eta()[d];
                cell.lo[d] = rep - 0.5 * g.eta()[d];
                cell.hi[d] = rep + 0.5 * g.eta()[d];
            }
            out[k] = m.noise.mode() == NoiseMode::multiplicative
                         ? cell_probability(m.noise, mu_, cell, x_)
                         : cell_probability(m.noise, mu_, cell);
        });
        return;
    }
    fill_axis_masses();
    fill_product(axis_mass_, 0, model_->state.dim(), 1.0, out);
}

double RowKernel::box_mass(const Box& box) const {
    const SystemModel& m = *model_;
    return m.noise.mode() == NoiseMode::multiplicative ? cell_probability(m.noise, mu_, box, x_)
                                                       : cell_probability(m.noise, mu_, box);
}

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

TransitionMatrix build_matrix(const SystemModel& m, int threads) {
    TransitionMatrix tm;
    tm.state_ = m.state;
    tm.n_inputs_ = m.n_inputs();
    tm.n_dist_ = m.n_disturbances();
    tm.rows_ = m.n_rows();
    tm.extents_ = window_extents(m);
    tm.row_width_ = 1;
    for (Index e : tm.extents_) tm.row_width_ *= e;
    tm.origins_.resize(tm.rows_);
    tm.probs_.resize(tm.rows_ * tm.row_width_);

    const Index pairs = m.n_states() * m.n_inputs();
    const Index n_w = m.n_disturbances();
    parallel_for(pairs, threads, [&](Index begin, Index end) {
        RowKernel kernel(m);
        for (Index p = begin; p < end; ++p) {
            const Index ix = p / m.n_inputs();
            const Index iu = p % m.n_inputs();
            for (Index iw = 0; iw < n_w; ++iw) {
                kernel.compute(ix, iu, iw);
                const Index row = p * n_w + iw;
                tm.origins_[row] = kernel.origin_flat();
                kernel.fill_row(tm.row(row));
            }
        }
    });
    return tm;
}

double TransitionMatrix::prob(Index r, Index post) const {
    Index rem_o = origins_[r];
    Index rem_p = post;
    Index k = 0;
    Index stride = 1;
    for (int d = 0; d < state_.dim(); ++d) {
        const Index jo = rem_o / state_.stride(d);
        rem_o %= state_.stride(d);
        const Index jp = rem_p / state_.stride(d);
        rem_p %= state_.stride(d);
        const Index off = jp - jo;
        if (off < 0 || off >= extents_[static_cast<std::size_t>(d)]) return 0.0;
        k = k * extents_[static_cast<std::size_t>(d)] + off;
        stride *= extents_[static_cast<std::size_t>(d)];
    }
    (void)stride;
    return row(r)[k];
}

TargetHitVector build_target_hit(const SystemModel& m, const Spec& spec, int threads) {
    validate_spec(spec, m.state);
    if (!spec.is_reach())
        throw ConfigError("build_target_hit requires a reachability or reach-avoid spec");
    const auto absorb = absorbing_states(m.state, spec);
    TargetHitVector t0(m.n_rows());

    const Index pairs = m.n_states() * m.n_inputs();
    const Index n_w = m.n_disturbances();
    parallel_for(pairs, threads, [&](Index begin, Index end) {
        RowKernel kernel(m);
        for (Index p = begin; p < end; ++p) {
            const Index ix = p / m.n_inputs();
            const Index iu = p % m.n_inputs();
            if (absorb[static_cast<std::size_t>(ix)]) {
                for (Index iw = 0; iw < n_w; ++iw) t0[p * n_w + iw] = 0.0;
                continue;
            }
            for (Index iw = 0; iw < n_w; ++iw) {
                kernel.compute(ix, iu, iw);
                t0[p * n_w + iw] = spec.target.empty() ? 0.0 : kernel.box_mass(spec.target);
            }
        }
    });
    return t0;
}

namespace {

// per-axis membership flags of representatives in a box interval
std::vector<std::vector<std::uint8_t>> axis_membership(const UniformGrid& g, const Box& box) {
    std::vector<std::vector<std::uint8_t>> in(static_cast<std::size_t>(g.dim()));
    for (int d = 0; d < g.dim(); ++d) {
        auto& v = in[static_cast<std::size_t>(d)];
        v.assign(static_cast<std::size_t>(g.count(d)), 0);
        if (box.dim() != g.dim()) continue;
        for (Index j = 0; j < g.count(d); ++j) {
            const double rep = g.lb()[d] + static_cast<double>(j) * g.eta()[d];
            v[static_cast<std::size_t>(j)] = (rep >= box.lo[d] && rep <= box.hi[d]) ? 1 : 0;
        }
    }
    return in;
}

void mask_rec(const std::vector<std::vector<std::uint8_t>>& inT,
              const std::vector<std::vector<std::uint8_t>>& inA, const IndexVec& origin,
              const IndexVec& extents, int d, int n, bool tPossible, bool aPossible, double*& out) {
    const Index o = origin[static_cast<std::size_t>(d)];
    const Index W = extents[static_cast<std::size_t>(d)];
    if (d == n - 1) {
        for (Index t = 0; t < W; ++t, ++out) {
            const bool zt = tPossible && inT[static_cast<std::size_t>(d)][static_cast<std::size_t>(o + t)];
            const bool za = aPossible && !inA.empty() &&
                            inA[static_cast<std::size_t>(d)][static_cast<std::size_t>(o + t)];
            if (zt || za) *out = 0.0;
        }
        return;
    }
    for (Index t = 0; t < W; ++t) {
        const bool tp = tPossible && inT[static_cast<std::size_t>(d)][static_cast<std::size_t>(o + t)];
        const bool ap = aPossible && !inA.empty() &&
                        inA[static_cast<std::size_t>(d)][static_cast<std::size_t>(o + t)];
        if (!tp && !ap) {
            out += [&] {
                Index blk = 1;
                for (int e = d + 1; e < n; ++e) blk *= extents[static_cast<std::size_t>(e)];
                return blk;
            }();
            continue;
        }
        mask_rec(inT, inA, origin, extents, d + 1, n, tp, ap, out);
    }
}

} // namespace

TransitionMatrix& mask_absorbing(TransitionMatrix& tm, const Spec& spec, int threads) {
    if (!spec.is_reach()) return tm;
    const UniformGrid& g = tm.state_grid();
    const auto inT = axis_membership(g, spec.target);
    const bool haveA = spec.avoid.dim() > 0;
    const auto inA = haveA ? axis_membership(g, spec.avoid)
                           : std::vector<std::vector<std::uint8_t>>{};

    const int n = g.dim();
    parallel_for(tm.rows(), threads, [&](Index begin, Index end) {
        IndexVec origin(static_cast<std::size_t>(n));
        for (Index r = begin; r < end; ++r) {
            Index rem = tm.origin(r);
            for (int d = 0; d < n; ++d) {
                origin[static_cast<std::size_t>(d)] = rem / g.stride(d);
                rem %= g.stride(d);
            }
            double* out = tm.row(r);
            mask_rec(inT, inA, origin, tm.window_extents(), 0, n, true, haveA, out);
        }
    });
    return tm;
}

} // namespace gridmdp
