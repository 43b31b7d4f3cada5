#pragma once

#include "gridmdp/expr.hpp"
#include "gridmdp/grid.hpp"
#include "gridmdp/noise.hpp"

#include <vector>

namespace gridmdp {

/// A quantized stochastic control system: state/input/disturbance grids, one
/// dynamics expression per state dimension, and the noise term. The
/// disturbance grid may be zero-dimensional (one empty point), in which case
/// the disturbance loop degenerates to a single iteration.
struct SystemModel {
    UniformGrid state;
    UniformGrid input;
    UniformGrid disturbance;
    std::vector<Expr> dynamics;
    NoiseSpec noise = NoiseSpec::normal(Vector::Ones(1), 0.0);

    int state_dim() const { return state.dim(); }
    bool has_disturbance() const { return disturbance.dim() > 0; }

    Index n_states() const { return state.size(); }
    Index n_inputs() const { return input.size(); }
    Index n_disturbances() const { return disturbance.size(); }
    /// Row count of the transition matrix: n_x * n_nu * n_w.
    Index n_rows() const {
        return static_cast<Index>(checked_mul(
            checked_mul(static_cast<std::uint64_t>(n_states()),
                        static_cast<std::uint64_t>(n_inputs()), "rows"),
            static_cast<std::uint64_t>(n_disturbances()), "rows"));
    }
};

/// Validates cross-field consistency and returns the model.
SystemModel make_model(UniformGrid state, UniformGrid input, UniformGrid disturbance,
                       std::vector<Expr> dynamics, NoiseSpec noise);

/// Noise-free image mu = f(x, u, w) of one grid triple.
Vector dynamics_image(const SystemModel& m, const Vector& x, const Vector& u, const Vector& w);

} // namespace gridmdp
