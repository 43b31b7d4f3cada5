#include "gridmdp/synthesis.hpp"

#include "gridmdp/parallel.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace gridmdp {

namespace {

// Gathered dot product of one stored/recomputed row with the value column.
// Iterates the slab in row-major order (the inner axis is contiguous in the
// flat state index), including exact zero terms, so the stored-matrix and
// on-the-fly paths accumulate identical floating-point sums.
double dot_slab(const double* row, const IndexVec& origin, const IndexVec& ext,
                const UniformGrid& g, const double* v, const std::uint8_t* absorb) {
    const int n = g.dim();
    const Index w_last = ext[static_cast<std::size_t>(n - 1)];
    Index flat_base = 0;
    for (int d = 0; d < n; ++d) flat_base += origin[static_cast<std::size_t>(d)] * g.stride(d);
    IndexVec j(static_cast<std::size_t>(n > 1 ? n - 1 : 0), 0);

    double sum = 0.0;
    const double* r = row;
    for (;;) {
        const double* vv = v + flat_base;
        if (absorb) {
            const std::uint8_t* aa = absorb + flat_base;
            for (Index t = 0; t < w_last; ++t) sum += aa[t] ? 0.0 : r[t] * vv[t];
        } else {
            for (Index t = 0; t < w_last; ++t) sum += r[t] * vv[t];
        }
        r += w_last;
        int d = n - 2;
        for (; d >= 0; --d) {
            flat_base += g.stride(d);
            if (++j[static_cast<std::size_t>(d)] < ext[static_cast<std::size_t>(d)]) break;
            flat_base -= ext[static_cast<std::size_t>(d)] * g.stride(d);
            j[static_cast<std::size_t>(d)] = 0;
        }
        if (d < 0) break;
    }
    return sum;
}

void decode_multi(const UniformGrid& g, Index flat, IndexVec& multi) {
    for (int d = 0; d < g.dim(); ++d) {
        multi[static_cast<std::size_t>(d)] = flat / g.stride(d);
        flat %= g.stride(d);
    }
}

struct BellmanWorkspace {
    Eigen::ArrayXd v_in;
    std::vector<std::uint8_t> absorb; // empty for safety
};

void bellman_impl(const SystemModel& m, const Spec& spec, const TransitionMatrix* tm,
                  const TargetHitVector* t0x, const double* v_next, double* v_out,
                  std::uint32_t* policy_out, std::uint32_t* wstar_out, int threads,
                  BellmanWorkspace& ws) {
    const Index n_x = m.n_states();
    const Index n_u = m.n_inputs();
    const Index n_w = m.n_disturbances();
    const bool reach = spec.is_reach();
    const std::uint8_t* absorb = ws.absorb.empty() ? nullptr : ws.absorb.data();

    if (ws.v_in.size() != n_x * n_u * n_w) ws.v_in.resize(n_x * n_u * n_w);
    Eigen::ArrayXd& v_in = ws.v_in;

    // expected-value pass, parallel over (state, input) pairs
    parallel_for(n_x * n_u, threads, [&](Index begin, Index end) {
        const UniformGrid& g = m.state;
        IndexVec origin(static_cast<std::size_t>(g.dim()));
        std::unique_ptr<RowKernel> kernel;
        std::vector<double> rowbuf;
        if (!tm) {
            kernel = std::make_unique<RowKernel>(m);
            rowbuf.resize(static_cast<std::size_t>(kernel->row_width()));
        }
        for (Index p = begin; p < end; ++p) {
            const Index ix = p / n_u;
            const Index iu = p % n_u;
            const bool absorbed = reach && absorb && absorb[ix];
            for (Index iw = 0; iw < n_w; ++iw) {
                const Index row = p * n_w + iw;
                if (absorbed) { // value pinned to zero; row never read
                    v_in[row] = 0.0;
                    continue;
                }
                double s;
                if (tm) {
                    decode_multi(g, tm->origin(row), origin);
                    s = dot_slab(tm->row(row), origin, tm->window_extents(), g, v_next, nullptr);
                    if (reach) s += (*t0x)[row];
                } else {
                    kernel->compute(ix, iu, iw);
                    kernel->fill_row(rowbuf.data());
                    s = dot_slab(rowbuf.data(), kernel->origin(), kernel->extents(), g, v_next,
                                 reach ? absorb : nullptr);
                    if (reach) s += kernel->box_mass(spec.target);
                }
                v_in[row] = s;
            }
        }
    });

    // max over inputs of min over disturbances, parallel over states
    parallel_for(n_x, threads, [&](Index begin, Index end) {
        for (Index ix = begin; ix < end; ++ix) {
            if (reach && absorb && absorb[ix]) {
                v_out[ix] = 0.0;
                if (policy_out) policy_out[ix] = 0;
                if (wstar_out) wstar_out[ix] = 0;
                continue;
            }
            double best = -std::numeric_limits<double>::infinity();
            Index best_u = 0, best_w = 0;
            for (Index iu = 0; iu < n_u; ++iu) {
                double mn = std::numeric_limits<double>::infinity();
                Index mn_w = 0;
                const Index base = (ix * n_u + iu) * n_w;
                for (Index iw = 0; iw < n_w; ++iw) {
                    if (v_in[base + iw] < mn) {
                        mn = v_in[base + iw];
                        mn_w = iw;
                    }
                }
                if (mn > best) {
                    best = mn;
                    best_u = iu;
                    best_w = mn_w;
                }
            }
            v_out[ix] = std::min(1.0, std::max(0.0, best)); // guard accumulated rounding
            if (policy_out) policy_out[ix] = static_cast<std::uint32_t>(best_u);
            if (wstar_out) wstar_out[ix] = static_cast<std::uint32_t>(best_w);
        }
    });
}

} // namespace

void bellman_step(const SystemModel& m, const Spec& spec, const TransitionMatrix* tm,
                  const TargetHitVector* t0x, const Eigen::VectorXd& v_next,
                  Eigen::VectorXd& v_out, std::uint32_t* policy_out, std::uint32_t* wstar_out,
                  int threads) {
    validate_spec(spec, m.state);
    if (v_next.size() != m.n_states())
        throw ConfigError("bellman_step: v_next size does not match the state grid");
    if (tm && spec.is_reach() && !t0x)
        throw ConfigError("bellman_step: matrix-backed reach step requires the target-hit vector");
    BellmanWorkspace ws;
    if (spec.is_reach()) ws.absorb = absorbing_states(m.state, spec);
    v_out.resize(m.n_states());
    bellman_impl(m, spec, tm, t0x, v_next.data(), v_out.data(), policy_out, wstar_out, threads,
                 ws);
}

namespace {

SynthesisResult run_backward(const SystemModel& m, const Spec& spec, const TransitionMatrix* tm,
                             const TargetHitVector* t0x, const SynthesisOptions& opts) {
    const Index n_x = m.n_states();
    const int T = spec.horizon;

    SynthesisResult res;
    res.state_grid = m.state;
    res.input_grid = m.input;
    res.disturbance_grid = m.disturbance;
    res.spec = spec;
    res.gamma = m.noise.gamma();
    res.mode = tm ? SynthesisMode::matrix : SynthesisMode::ofa;
    res.values.resize(n_x, T + 1);
    res.policy.resize(n_x, T);
    res.worst_dist.resize(n_x, T);

    BellmanWorkspace ws;
    if (spec.is_reach()) {
        ws.absorb = absorbing_states(m.state, spec);
        res.absorbing = ws.absorb;
        res.values.col(T).setZero();
    } else {
        res.values.col(T).setOnes();
    }

    for (int k = T - 1; k >= 0; --k) {
        bellman_impl(m, spec, tm, t0x, res.values.col(k + 1).data(), res.values.col(k).data(),
                     res.policy.col(k).data(), res.worst_dist.col(k).data(), opts.threads, ws);
    }
    return res;
}

} // namespace

SynthesisResult synthesize_with_matrix(const SystemModel& m, TransitionMatrix& tm,
                                       const TargetHitVector* t0x, const Spec& spec,
                                       const SynthesisOptions& opts) {
    validate_spec(spec, m.state);
    TargetHitVector t0_local;
    if (spec.is_reach()) {
        mask_absorbing(tm, spec, opts.threads); // idempotent
        if (!t0x) {
            t0_local = build_target_hit(m, spec, opts.threads);
            t0x = &t0_local;
        }
    }
    return run_backward(m, spec, &tm, spec.is_reach() ? t0x : nullptr, opts);
}

SynthesisResult synthesize(const SystemModel& m, const Spec& spec, const SynthesisOptions& opts) {
    validate_spec(spec, m.state);
    if (opts.mode == SynthesisMode::matrix) {
        const std::uint64_t need = memory_estimate(m);
        if (opts.memory_budget != 0 && need > opts.memory_budget) {
            std::ostringstream os;
            os << "matrix mode needs " << need << " bytes but the budget is "
               << opts.memory_budget << "; use ofa mode";
            throw MemoryError(os.str());
        }
        TransitionMatrix tm = build_matrix(m, opts.threads);
        return synthesize_with_matrix(m, tm, nullptr, spec, opts);
    }
    return run_backward(m, spec, nullptr, nullptr, opts);
}

Vector query_policy(const SynthesisResult& res, const Vector& x, int k) {
    if (k < 1 || k > res.spec.horizon) {
        std::ostringstream os;
        os << "query_policy: step " << k << " outside [1, " << res.spec.horizon << "]";
        throw std::out_of_range(os.str());
    }
    const Index ix = point_to_index(res.state_grid, x);
    const std::uint32_t iu = res.policy(ix, k - 1);
    return index_to_point(res.input_grid, static_cast<Index>(iu));
}

} // namespace gridmdp
