#pragma once

#include "gridmdp/model.hpp"
#include "gridmdp/spec.hpp"
#include "gridmdp/synthesis.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gridmdp {

struct GridConfig {
    int dim = 0;
    std::vector<double> lb, ub, eta;
    bool operator==(const GridConfig&) const = default;
};

struct BoxConfig {
    std::vector<double> lb, ub;
    bool operator==(const BoxConfig&) const = default;
};

/// Parsed problem description; see docs/config-format.md for the key set.
struct Config {
    GridConfig states, inputs;
    std::optional<GridConfig> disturbances;
    std::vector<std::string> dynamics; // one expression per state dimension
    std::map<std::string, double> constants;

    std::string noise_type = "normal"; // normal|uniform|exponential|beta
    NoiseMode noise_mode = NoiseMode::additive;
    double cutting_probability = 0.0;
    std::vector<double> noise_sigma, noise_a, noise_b, noise_rate, noise_alpha, noise_beta;

    std::string spec_type; // safety|reachability|reach-avoid
    int time_steps = 0;
    std::optional<BoxConfig> target, avoid;

    int threads = 0;
    std::string mode = "matrix"; // matrix|ofa
    std::uint64_t mem_budget = 0;
    std::uint64_t seed = 0;
    int runs = 100;
    std::string output;

    bool operator==(const Config&) const = default;
};

/// Parses the line-oriented `key = value;` format ('#' comments, vectors in
/// braces). Throws ConfigError with line numbers on malformed statements,
/// unknown/missing keys, or dimension mismatches.
Config load_config(const std::string& path);
Config parse_config(std::istream& in, const std::string& name);

/// Canonical serialization; parse_config(save) == original.
void save_config(const Config& cfg, std::ostream& os);
void save_config(const Config& cfg, const std::string& path);

/// Instantiates grids, expressions and noise. Expression errors name the key.
SystemModel build_model(const Config& cfg);
Spec build_spec(const Config& cfg);
SynthesisOptions build_options(const Config& cfg);

/// n-dimensional scaling benchmark: two grid points per state axis
/// (|X^| = 2^n), a singleton input, contracting dynamics 0.9*x_i and normal
/// noise. Safety horizon 6.
Config benchmark_chain_config(int n);

} // namespace gridmdp
