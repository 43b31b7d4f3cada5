#pragma once

#include "gridmdp/abstraction.hpp"

#include <Eigen/Core>

namespace gridmdp {

enum class SynthesisMode : std::uint8_t { matrix, ofa };

struct SynthesisOptions {
    SynthesisMode mode = SynthesisMode::matrix;
    int threads = 0;               // 0 = hardware concurrency
    std::uint64_t memory_budget = 0; // bytes; 0 = unlimited; enforced in matrix mode
};

using PolicyTable = Eigen::Matrix<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Value and policy tables of one synthesis run.
///
/// values(x, j) is the max-min satisfaction probability with j time steps
/// already elapsed (column 0 is the reported full-horizon value, column
/// horizon the terminal condition). policy(x, j) / worst_dist(x, j) are the
/// maximizing input index and the minimizing disturbance index at that input;
/// ties break toward the lowest flat index. For reach specs the value of
/// states inside T or A is pinned to 0 and flagged in `absorbing` (the
/// synthesized probability is meaningful for start states outside T and A).
struct SynthesisResult {
    UniformGrid state_grid;
    UniformGrid input_grid;
    UniformGrid disturbance_grid;
    Spec spec;
    double gamma = 0.0;
    SynthesisMode mode = SynthesisMode::matrix;

    Eigen::MatrixXd values;          // n_x x (horizon+1)
    PolicyTable policy;              // n_x x horizon
    PolicyTable worst_dist;          // n_x x horizon
    std::vector<std::uint8_t> absorbing; // per state, reach kinds only
};

/// Backward max-min dynamic programming over the quantized kernel.
/// Matrix mode materializes the kernel once (after checking the memory
/// budget); ofa mode recomputes kernel entries inside every time step and
/// never allocates it. Both modes produce identical tables.
SynthesisResult synthesize(const SystemModel& m, const Spec& spec,
                           const SynthesisOptions& opts = {});

/// Matrix-mode synthesis over a caller-supplied kernel (masked here for reach
/// kinds; idempotent). t0x may be null, in which case it is built on demand.
SynthesisResult synthesize_with_matrix(const SystemModel& m, TransitionMatrix& tm,
                                       const TargetHitVector* t0x, const Spec& spec,
                                       const SynthesisOptions& opts = {});

/// One backward step, exposed for testing. With tm null the kernel entries
/// are computed on the fly. For reach kinds tm must already be masked and
/// t0x supplied when tm is given. policy_out/wstar_out hold n_x entries each.
void bellman_step(const SystemModel& m, const Spec& spec, const TransitionMatrix* tm,
                  const TargetHitVector* t0x, const Eigen::VectorXd& v_next,
                  Eigen::VectorXd& v_out, std::uint32_t* policy_out, std::uint32_t* wstar_out,
                  int threads = 0);

/// Input vector prescribed at continuous state x and step k (1-based,
/// 1 <= k <= horizon). Throws std::out_of_range outside the quantized region
/// or the horizon.
Vector query_policy(const SynthesisResult& res, const Vector& x, int k);

} // namespace gridmdp
