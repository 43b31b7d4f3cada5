#include "gridmdp/config.hpp"
#include "gridmdp/io.hpp"
#include "gridmdp/parallel.hpp"
#include "gridmdp/sim.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

namespace {

using namespace gridmdp;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CommonArgs {
    std::string config;
    int threads = -1; // -1: keep config value
    std::string mode;
    std::int64_t mem_budget = -1;
    std::int64_t seed = -1;
    int runs = -1;
    int time_steps = -1;
    std::string output;
};

Config effective_config(const CommonArgs& a) {
    Config cfg = load_config(a.config);
    if (a.threads >= 0) cfg.threads = a.threads;
    if (!a.mode.empty()) cfg.mode = a.mode;
    if (a.mem_budget >= 0) cfg.mem_budget = static_cast<std::uint64_t>(a.mem_budget);
    if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
    if (a.runs >= 0) cfg.runs = a.runs;
    if (a.time_steps >= 0) cfg.time_steps = a.time_steps;
    if (!a.output.empty()) cfg.output = a.output;
    return cfg;
}

void print_sizes(const SystemModel& m) {
    std::cout << "states: " << m.n_states() << "\n";
    std::cout << "inputs: " << m.n_inputs() << "\n";
    std::cout << "disturbances: " << m.n_disturbances() << "\n";
    std::cout << "state_input_pairs: " << m.n_states() * m.n_inputs() << "\n";
    std::cout << "rows: " << m.n_rows() << "\n";
    const IndexVec w = window_extents(m);
    Index width = 1;
    for (Index e : w) width *= e;
    std::cout << "row_width: " << width << "\n";
    std::cout << "memory_estimate_bytes: " << memory_estimate(m) << "\n";
}

Vector parse_point(const std::string& s) {
    if (s.size() < 2 || s.front() != '{' || s.back() != '}')
        throw ConfigError("--x0 expects a braced vector like {0, 0}");
    std::vector<double> out;
    std::string inner = s.substr(1, s.size() - 2);
    std::size_t pos = 0;
    while (pos <= inner.size()) {
        const std::size_t comma = inner.find(',', pos);
        const std::string item =
            comma == std::string::npos ? inner.substr(pos) : inner.substr(pos, comma - pos);
        out.push_back(std::stod(item));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return Eigen::Map<const Vector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

int cmd_estimate(const CommonArgs& args) {
    const Config cfg = effective_config(args);
    const SystemModel m = build_model(cfg);
    print_sizes(m);
    return 0;
}

int cmd_abstract(const CommonArgs& args, const std::string& dump) {
    const Config cfg = effective_config(args);
    const SystemModel m = build_model(cfg);
    print_sizes(m);
    if (cfg.mem_budget != 0 && memory_estimate(m) > cfg.mem_budget) {
        throw MemoryError("matrix needs " + std::to_string(memory_estimate(m)) +
                          " bytes but the budget is " + std::to_string(cfg.mem_budget) +
                          "; use ofa mode");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const TransitionMatrix tm = build_matrix(m, cfg.threads);
    std::cout << "time_abstract_s: " << seconds_since(t0) << "\n";
    if (!dump.empty()) {
        write_matrix(tm, dump);
        std::cout << "matrix_dump: " << dump << "\n";
    }
    return 0;
}

int cmd_synthesize(const CommonArgs& args) {
    const Config cfg = effective_config(args);
    const SystemModel m = build_model(cfg);
    const Spec spec = build_spec(cfg);
    const SynthesisOptions opts = build_options(cfg);
    print_sizes(m);
    std::cout << "mode: " << cfg.mode << "\n";
    std::cout << "threads: " << resolve_threads(cfg.threads) << "\n";
    std::cout << "time_steps: " << spec.horizon << "\n";

    const auto t0 = std::chrono::steady_clock::now();
    const SynthesisResult res = synthesize(m, spec, opts);
    std::cout << "time_synthesize_s: " << seconds_since(t0) << "\n";

    const std::string out = cfg.output.empty() ? "results.bin" : cfg.output;
    write_results(res, out);
    std::cout << "output: " << out << "\n";
    return 0;
}

int cmd_simulate(const CommonArgs& args, const std::string& results_path, const std::string& x0s,
                 const std::string& dist_mode, const std::string& traj) {
    const Config cfg = effective_config(args);
    const SystemModel m = build_model(cfg);
    const std::string rp = results_path.empty() ? cfg.output : results_path;
    if (rp.empty()) throw ConfigError("simulate needs --results or exec.output in the config");
    const SynthesisResult res = read_results(rp);
    const Vector x0 = parse_point(x0s);
    const DisturbanceMode dm = dist_mode == "worst-case" ? DisturbanceMode::worst_case
                                                         : DisturbanceMode::random;
    const TrajectoryBatch batch =
        simulate(m, res.spec, res, x0, cfg.runs, cfg.seed, dm, cfg.threads);
    std::cout << "runs: " << batch.runs.size() << "\n";
    std::cout << "empirical_rate: " << empirical_rate(batch) << "\n";
    const Index ix = point_to_index(res.state_grid, x0);
    std::cout << "value_at_x0: " << res.values(ix, 0) << "\n";
    if (!traj.empty()) {
        write_trajectory_csv(batch, traj);
        std::cout << "trajectories: " << traj << "\n";
    }
    return 0;
}

int cmd_export_prism(const CommonArgs& args) {
    const Config cfg = effective_config(args);
    const SystemModel m = build_model(cfg);
    if (cfg.output.empty()) throw ConfigError("export-prism needs --output or exec.output");
    if (cfg.mem_budget != 0 && memory_estimate(m) > cfg.mem_budget)
        throw MemoryError("matrix exceeds the configured budget; export needs matrix mode");
    const TransitionMatrix tm = build_matrix(m, cfg.threads);
    export_prism(tm, cfg.output);
    std::cout << "output: " << cfg.output << "\n";
    return 0;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config, "configuration file")->required();
    cmd->add_option("--threads", args.threads, "worker threads (0 = all cores, 1 = serial)");
    cmd->add_option("--mem-budget", args.mem_budget, "memory budget in bytes (0 = unlimited)");
    cmd->add_option("--seed", args.seed, "random seed override");
    cmd->add_option("--runs", args.runs, "simulation run count override");
    cmd->add_option("--time-steps", args.time_steps, "horizon override");
    cmd->add_option("-o,--output", args.output, "output path override");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite MDP abstraction and max-min controller synthesis on uniform grids"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string dump, results_path, x0s, dist_mode = "random", traj, mode;

    CLI::App* est = app.add_subcommand("estimate-mem", "report sizes and the kernel memory estimate");
    add_common(est, args);

    CLI::App* abs = app.add_subcommand("abstract", "build the transition kernel");
    add_common(abs, args);
    abs->add_option("--dump-matrix", dump, "write the raw kernel container to this path");

    CLI::App* syn = app.add_subcommand("synthesize", "build (or stream) the kernel and synthesize");
    add_common(syn, args);
    syn->add_option("--mode", mode, "matrix or ofa")->check(CLI::IsMember({"matrix", "ofa"}));

    CLI::App* sim = app.add_subcommand("simulate", "closed-loop Monte Carlo under a synthesized policy");
    add_common(sim, args);
    sim->add_option("--results", results_path, "results container (defaults to exec.output)");
    sim->add_option("--x0", x0s, "initial state, e.g. {0, 0}")->required();
    sim->add_option("--dist-mode", dist_mode, "random or worst-case")
        ->check(CLI::IsMember({"random", "worst-case"}));
    sim->add_option("--traj", traj, "write trajectory CSV to this path");

    CLI::App* prism = app.add_subcommand("export-prism", "write the kernel in PRISM explicit format");
    add_common(prism, args);

    CLI11_PARSE(app, argc, argv);
    args.mode = mode;

    try {
        if (est->parsed()) return cmd_estimate(args);
        if (abs->parsed()) return cmd_abstract(args, dump);
        if (syn->parsed()) return cmd_synthesize(args);
        if (sim->parsed()) return cmd_simulate(args, results_path, x0s, dist_mode, traj);
        if (prism->parsed()) return cmd_export_prism(args);
    } catch (const gridmdp::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gridmdp::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gridmdp::MemoryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const gridmdp::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const gridmdp::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
