#include "gridmdp/sim.hpp"

#include "gridmdp/parallel.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <random>

namespace gridmdp {

namespace {

enum class RunState { open, satisfied, failed };

Trajectory roll_one(const SystemModel& m, const Spec& spec, const SynthesisResult& res,
                    const Vector& x0, std::uint64_t run_seed, DisturbanceMode dmode) {
    const int T = spec.horizon;
    const int n = m.state_dim();
    const bool reach = spec.is_reach();
    const Index n_w = m.n_disturbances();

    std::mt19937_64 rng(run_seed);
    Trajectory tr;
    tr.states.resize(T + 1, n);
    tr.inputs.resize(T, m.input.dim());
    tr.dists.resize(T, m.disturbance.dim());

    Vector x = x0;
    tr.states.row(0) = x.transpose();
    RunState state = RunState::open;
    if (reach) { // immediate resolution at the start state; A wins over T
        if (spec.avoid.dim() > 0 && spec.avoid.contains(x)) state = RunState::failed;
        else if (spec.target.contains(x)) state = RunState::satisfied;
    }

    int k = 0;
    while (state == RunState::open && k < T) {
        const Vector u = query_policy(res, x, k + 1);
        Index iw = 0;
        if (n_w > 1) {
            if (dmode == DisturbanceMode::random) {
                std::uniform_int_distribution<Index> pick(0, n_w - 1);
                iw = pick(rng);
            } else {
                iw = static_cast<Index>(res.worst_dist(point_to_index(m.state, x), k));
            }
        }
        const Vector w = index_to_point(m.disturbance, iw);
        const Vector noise = m.noise.mode() == NoiseMode::multiplicative
                                 ? sample(m.noise, rng, x)
                                 : sample(m.noise, rng);
        const Vector next = dynamics_image(m, x, u, w) + noise;

        tr.inputs.row(k) = u.transpose();
        tr.dists.row(k) = w.transpose();
        tr.states.row(k + 1) = next.transpose();
        ++k;
        x = next;

        if (!contains(m.state, x)) {
            state = RunState::failed; // left the quantized region
        } else if (reach) {
            if (spec.avoid.dim() > 0 && spec.avoid.contains(x)) state = RunState::failed;
            else if (spec.target.contains(x)) state = RunState::satisfied;
        }
    }

    if (state == RunState::open) // horizon exhausted
        state = reach ? RunState::failed : RunState::satisfied;

    tr.satisfied = state == RunState::satisfied;
    tr.states.conservativeResize(k + 1, Eigen::NoChange);
    tr.inputs.conservativeResize(k, Eigen::NoChange);
    tr.dists.conservativeResize(k, Eigen::NoChange);
    return tr;
}

} // namespace

TrajectoryBatch simulate(const SystemModel& m, const Spec& spec, const SynthesisResult& res,
                         const Vector& x0, int runs, std::uint64_t seed, DisturbanceMode dmode,
                         int threads) {
    validate_spec(spec, m.state);
    if (runs < 1) throw ConfigError("simulate: need at least one run");
    if (!contains(m.state, x0))
        throw std::out_of_range("simulate: x0 lies outside the quantized region");
    if (spec.horizon > res.spec.horizon || res.state_grid.size() != m.state.size())
        throw ConfigError("simulate: synthesis result does not match the model/spec");

    TrajectoryBatch batch;
    batch.spec = spec;
    batch.runs.resize(static_cast<std::size_t>(runs));
    parallel_for(runs, threads, [&](Index begin, Index end) {
        for (Index r = begin; r < end; ++r)
            batch.runs[static_cast<std::size_t>(r)] =
                roll_one(m, spec, res, x0, derive_stream_seed(seed, static_cast<std::uint64_t>(r)),
                         dmode);
    });
    return batch;
}

double empirical_rate(const TrajectoryBatch& batch) {
    if (batch.runs.empty()) throw ConfigError("empirical_rate: empty batch");
    std::size_t ok = 0;
    for (const Trajectory& t : batch.runs) ok += t.satisfied ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(batch.runs.size());
}

namespace {
void put_double(std::ostream& os, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
}
} // namespace

void write_trajectory_csv(const TrajectoryBatch& batch, std::ostream& os) {
    if (batch.runs.empty()) throw ConfigError("write_trajectory_csv: empty batch");
    const auto& first = batch.runs.front();
    os << "run,k";
    for (int d = 0; d < first.states.cols(); ++d) os << ",x" << d;
    for (int d = 0; d < first.inputs.cols(); ++d) os << ",u" << d;
    for (int d = 0; d < first.dists.cols(); ++d) os << ",w" << d;
    os << ",flag\n";
    for (std::size_t r = 0; r < batch.runs.size(); ++r) {
        const Trajectory& tr = batch.runs[r];
        for (int k = 0; k <= tr.steps(); ++k) {
            os << r << ',' << k;
            for (int d = 0; d < tr.states.cols(); ++d) {
                os << ',';
                put_double(os, tr.states(k, d));
            }
            for (int d = 0; d < tr.inputs.cols(); ++d) {
                os << ',';
                if (k < tr.steps()) put_double(os, tr.inputs(k, d));
            }
            for (int d = 0; d < tr.dists.cols(); ++d) {
                os << ',';
                if (k < tr.steps()) put_double(os, tr.dists(k, d));
            }
            os << ',' << (tr.satisfied ? 1 : 0) << '\n';
        }
    }
}

void write_trajectory_csv(const TrajectoryBatch& batch, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    write_trajectory_csv(batch, os);
    if (!os) throw IoError("failed while writing '" + path + "'");
}

} // namespace gridmdp
