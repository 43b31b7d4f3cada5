#pragma once

#include "gridmdp/synthesis.hpp"

#include <iosfwd>

namespace gridmdp {

enum class DisturbanceMode : std::uint8_t { random, worst_case };

/// One closed-loop rollout. Rows of `states` are x(0..steps); a run that
/// resolves early (spec satisfied/violated, or the state leaves the quantized
/// region) records only the steps taken.
struct Trajectory {
    Eigen::MatrixXd states; // (steps+1) x n
    Eigen::MatrixXd inputs; // steps x m
    Eigen::MatrixXd dists;  // steps x p
    bool satisfied = false;

    int steps() const { return static_cast<int>(inputs.rows()); }
};

struct TrajectoryBatch {
    Spec spec;
    std::vector<Trajectory> runs;
};

/// Monte Carlo closed-loop simulation under the synthesized policy.
///
/// Per step the input comes from query_policy at the current continuous
/// state; the disturbance is drawn uniformly from the disturbance grid
/// (random mode) or replayed from the stored synthesis argmin (worst_case);
/// the noise is sampled from the model's distribution. Safety counts a run
/// satisfied when it stays inside the quantized region for the whole horizon;
/// reach kinds when it enters T before A within the horizon (leaving the
/// region fails either way; a start in both T and A counts as avoid). Runs
/// use independent streams split from `seed`, so batches are reproducible for
/// any thread count.
TrajectoryBatch simulate(const SystemModel& m, const Spec& spec, const SynthesisResult& res,
                         const Vector& x0, int runs, std::uint64_t seed,
                         DisturbanceMode dmode = DisturbanceMode::random, int threads = 0);

/// Fraction of satisfied runs. Throws ConfigError on an empty batch.
double empirical_rate(const TrajectoryBatch& batch);

/// One row per (run, step): run, k, x..., nu..., w..., flag. The terminal
/// state row leaves the input/disturbance columns empty.
void write_trajectory_csv(const TrajectoryBatch& batch, std::ostream& os);
void write_trajectory_csv(const TrajectoryBatch& batch, const std::string& path);

} // namespace gridmdp
