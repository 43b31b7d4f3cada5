#include "gridmdp/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace gridmdp {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& name, int line, const std::string& msg) {
    std::ostringstream os;
    os << name << ":" << line << ": " << msg;
    throw ConfigError(os.str());
}

struct Statement {
    std::string value;
    int line = 0;
    bool used = false;
};

double parse_double(const std::string& name, int line, const std::string& tok) {
    char* end = nullptr;
    const std::string t = trim(tok);
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size())
        fail(name, line, "malformed number '" + t + "'");
    return v;
}

std::int64_t parse_int(const std::string& name, int line, const std::string& tok) {
    char* end = nullptr;
    const std::string t = trim(tok);
    const std::int64_t v = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size())
        fail(name, line, "malformed integer '" + t + "'");
    return v;
}

std::vector<double> parse_vector(const std::string& name, int line, const std::string& tok) {
    const std::string t = trim(tok);
    if (t.size() < 2 || t.front() != '{' || t.back() != '}')
        fail(name, line, "expected a braced vector {a, b, ...}, got '" + t + "'");
    std::vector<double> out;
    std::string inner = t.substr(1, t.size() - 2);
    std::size_t pos = 0;
    while (pos <= inner.size()) {
        const std::size_t comma = inner.find(',', pos);
        const std::string item = comma == std::string::npos ? inner.substr(pos)
                                                            : inner.substr(pos, comma - pos);
        out.push_back(parse_double(name, line, item));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

class Interpreter {
public:
    Interpreter(std::istream& in, std::string name) : name_(std::move(name)) {
        std::string raw;
        int lineno = 0;
        while (std::getline(in, raw)) {
            ++lineno;
            const auto hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            const std::string s = trim(raw);
            if (s.empty()) continue;
            if (s.back() != ';')
                fail(name_, lineno, "statement must end with ';'");
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                fail(name_, lineno, "expected 'key = value;'");
            const std::string key = trim(s.substr(0, eq));
            const std::string value = trim(s.substr(eq + 1, s.size() - eq - 2));
            if (key.empty()) fail(name_, lineno, "empty key");
            if (stmts_.count(key))
                fail(name_, lineno, "duplicate key '" + key + "'");
            stmts_[key] = Statement{value, lineno, false};
        }
    }

    Config run() {
        Config cfg;
        cfg.states = grid_block("states", true);
        cfg.inputs = grid_block("inputs", true);
        if (has_prefix("disturbances.")) cfg.disturbances = grid_block("disturbances", true);

        for (int i = 0; i < cfg.states.dim; ++i) {
            const std::string key = "dynamics.x" + std::to_string(i);
            const Statement* st = find(key);
            if (!st) throw ConfigError(name_ + ": missing mandatory key '" + key + "'");
            cfg.dynamics.push_back(st->value);
        }

        for (auto& [key, st] : stmts_) {
            if (key.rfind("constants.", 0) == 0) {
                cfg.constants[key.substr(10)] = parse_double(name_, st.line, st.value);
                st.used = true;
            }
        }

        cfg.noise_type = require_str("noise.type");
        if (const Statement* st = find("noise.mode")) {
            if (st->value == "additive") cfg.noise_mode = NoiseMode::additive;
            else if (st->value == "multiplicative") cfg.noise_mode = NoiseMode::multiplicative;
            else fail(name_, st->line, "noise.mode must be additive or multiplicative");
        }
        if (const Statement* st = find("noise.cutting_probability"))
            cfg.cutting_probability = parse_double(name_, st->line, st->value);
        if (cfg.noise_type == "normal") {
            cfg.noise_sigma = require_vec("noise.sigma");
        } else if (cfg.noise_type == "uniform") {
            cfg.noise_a = require_vec("noise.a");
            cfg.noise_b = require_vec("noise.b");
        } else if (cfg.noise_type == "exponential") {
            cfg.noise_rate = require_vec("noise.rate");
        } else if (cfg.noise_type == "beta") {
            cfg.noise_alpha = require_vec("noise.alpha");
            cfg.noise_beta = require_vec("noise.beta");
        } else {
            throw ConfigError(name_ + ": unknown noise.type '" + cfg.noise_type + "'");
        }

        cfg.spec_type = require_str("spec.type");
        cfg.time_steps = static_cast<int>(require_int("spec.time_steps"));
        if (has_prefix("target.")) {
            BoxConfig b;
            b.lb = require_vec("target.lb");
            b.ub = require_vec("target.ub");
            cfg.target = b;
        }
        if (has_prefix("avoid.")) {
            BoxConfig b;
            b.lb = require_vec("avoid.lb");
            b.ub = require_vec("avoid.ub");
            cfg.avoid = b;
        }

        if (const Statement* st = find("exec.threads"))
            cfg.threads = static_cast<int>(parse_int(name_, st->line, st->value));
        if (const Statement* st = find("exec.mode")) {
            if (st->value != "matrix" && st->value != "ofa")
                fail(name_, st->line, "exec.mode must be matrix or ofa");
            cfg.mode = st->value;
        }
        if (const Statement* st = find("exec.mem_budget"))
            cfg.mem_budget = static_cast<std::uint64_t>(parse_int(name_, st->line, st->value));
        if (const Statement* st = find("exec.seed"))
            cfg.seed = static_cast<std::uint64_t>(parse_int(name_, st->line, st->value));
        if (const Statement* st = find("exec.runs"))
            cfg.runs = static_cast<int>(parse_int(name_, st->line, st->value));
        if (const Statement* st = find("exec.output")) cfg.output = st->value;

        for (const auto& [key, st] : stmts_)
            if (!st.used)
                fail(name_, st.line, "unknown key '" + key + "'");

        check(cfg);
        return cfg;
    }

private:
    std::string name_;
    std::map<std::string, Statement> stmts_;

    const Statement* find(const std::string& key) {
        auto it = stmts_.find(key);
        if (it == stmts_.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }
    bool has_prefix(const std::string& p) const {
        auto it = stmts_.lower_bound(p);
        return it != stmts_.end() && it->first.rfind(p, 0) == 0;
    }
    const Statement& require(const std::string& key) {
        const Statement* st = find(key);
        if (!st) throw ConfigError(name_ + ": missing mandatory key '" + key + "'");
        return *st;
    }
    std::string require_str(const std::string& key) { return require(key).value; }
    std::int64_t require_int(const std::string& key) {
        const Statement& st = require(key);
        return parse_int(name_, st.line, st.value);
    }
    std::vector<double> require_vec(const std::string& key) {
        const Statement& st = require(key);
        return parse_vector(name_, st.line, st.value);
    }

    GridConfig grid_block(const std::string& prefix, bool mandatory) {
        GridConfig g;
        if (!mandatory && !has_prefix(prefix + ".")) return g;
        g.dim = static_cast<int>(require_int(prefix + ".dim"));
        g.lb = require_vec(prefix + ".lb");
        g.ub = require_vec(prefix + ".ub");
        g.eta = require_vec(prefix + ".eta");
        if (g.dim < 0) throw ConfigError(name_ + ": " + prefix + ".dim must be non-negative");
        for (const auto* v : {&g.lb, &g.ub, &g.eta}) {
            if (static_cast<int>(v->size()) != g.dim)
                throw ConfigError(name_ + ": " + prefix +
                                  " vectors must have " + std::to_string(g.dim) + " entries");
        }
        return g;
    }

    void check(const Config& cfg) const {
        auto check_n = [&](const std::vector<double>& v, const char* key) {
            if (!v.empty() && static_cast<int>(v.size()) != cfg.states.dim)
                throw ConfigError(name_ + ": " + key + " must have one entry per state dimension");
        };
        check_n(cfg.noise_sigma, "noise.sigma");
        check_n(cfg.noise_a, "noise.a");
        check_n(cfg.noise_b, "noise.b");
        check_n(cfg.noise_rate, "noise.rate");
        check_n(cfg.noise_alpha, "noise.alpha");
        check_n(cfg.noise_beta, "noise.beta");
        auto check_box = [&](const std::optional<BoxConfig>& b, const char* key) {
            if (b && (static_cast<int>(b->lb.size()) != cfg.states.dim ||
                      static_cast<int>(b->ub.size()) != cfg.states.dim))
                throw ConfigError(name_ + ": " + key + " box must match the state dimension");
        };
        check_box(cfg.target, "target");
        check_box(cfg.avoid, "avoid");
    }
};

Vector to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fmt_vector(const std::vector<double>& v) {
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += fmt_double(v[i]);
    }
    return s + "}";
}

} // namespace

Config parse_config(std::istream& in, const std::string& name) {
    return Interpreter(in, name).run();
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

void save_config(const Config& cfg, std::ostream& os) {
    auto grid = [&](const char* prefix, const GridConfig& g) {
        os << prefix << ".dim = " << g.dim << ";\n";
        os << prefix << ".lb = " << fmt_vector(g.lb) << ";\n";
        os << prefix << ".ub = " << fmt_vector(g.ub) << ";\n";
        os << prefix << ".eta = " << fmt_vector(g.eta) << ";\n";
    };
    grid("states", cfg.states);
    grid("inputs", cfg.inputs);
    if (cfg.disturbances) grid("disturbances", *cfg.disturbances);
    for (std::size_t i = 0; i < cfg.dynamics.size(); ++i)
        os << "dynamics.x" << i << " = " << cfg.dynamics[i] << ";\n";
    for (const auto& [k, v] : cfg.constants)
        os << "constants." << k << " = " << fmt_double(v) << ";\n";
    os << "noise.type = " << cfg.noise_type << ";\n";
    os << "noise.mode = "
       << (cfg.noise_mode == NoiseMode::additive ? "additive" : "multiplicative") << ";\n";
    os << "noise.cutting_probability = " << fmt_double(cfg.cutting_probability) << ";\n";
    if (!cfg.noise_sigma.empty()) os << "noise.sigma = " << fmt_vector(cfg.noise_sigma) << ";\n";
    if (!cfg.noise_a.empty()) os << "noise.a = " << fmt_vector(cfg.noise_a) << ";\n";
    if (!cfg.noise_b.empty()) os << "noise.b = " << fmt_vector(cfg.noise_b) << ";\n";
    if (!cfg.noise_rate.empty()) os << "noise.rate = " << fmt_vector(cfg.noise_rate) << ";\n";
    if (!cfg.noise_alpha.empty()) os << "noise.alpha = " << fmt_vector(cfg.noise_alpha) << ";\n";
    if (!cfg.noise_beta.empty()) os << "noise.beta = " << fmt_vector(cfg.noise_beta) << ";\n";
    os << "spec.type = " << cfg.spec_type << ";\n";
    os << "spec.time_steps = " << cfg.time_steps << ";\n";
    if (cfg.target) {
        os << "target.lb = " << fmt_vector(cfg.target->lb) << ";\n";
        os << "target.ub = " << fmt_vector(cfg.target->ub) << ";\n";
    }
    if (cfg.avoid) {
        os << "avoid.lb = " << fmt_vector(cfg.avoid->lb) << ";\n";
        os << "avoid.ub = " << fmt_vector(cfg.avoid->ub) << ";\n";
    }
    os << "exec.threads = " << cfg.threads << ";\n";
    os << "exec.mode = " << cfg.mode << ";\n";
    os << "exec.mem_budget = " << cfg.mem_budget << ";\n";
    os << "exec.seed = " << cfg.seed << ";\n";
    os << "exec.runs = " << cfg.runs << ";\n";
    if (!cfg.output.empty()) os << "exec.output = " << cfg.output << ";\n";
}

void save_config(const Config& cfg, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    save_config(cfg, os);
}

SystemModel build_model(const Config& cfg) {
    UniformGrid state = make_grid(to_eigen(cfg.states.lb), to_eigen(cfg.states.ub),
                                  to_eigen(cfg.states.eta));
    UniformGrid input = make_grid(to_eigen(cfg.inputs.lb), to_eigen(cfg.inputs.ub),
                                  to_eigen(cfg.inputs.eta));
    UniformGrid dist;
    if (cfg.disturbances)
        dist = make_grid(to_eigen(cfg.disturbances->lb), to_eigen(cfg.disturbances->ub),
                         to_eigen(cfg.disturbances->eta));

    const Dims dims{cfg.states.dim, cfg.inputs.dim,
                    cfg.disturbances ? cfg.disturbances->dim : 0};
    std::vector<Expr> dynamics;
    for (std::size_t i = 0; i < cfg.dynamics.size(); ++i) {
        try {
            dynamics.push_back(parse_expression(cfg.dynamics[i], dims, cfg.constants));
        } catch (const ParseError& e) {
            throw ConfigError("dynamics.x" + std::to_string(i) + ": " + e.what());
        }
    }

    NoiseSpec noise = [&] {
        const double g = cfg.cutting_probability;
        if (cfg.noise_type == "normal")
            return NoiseSpec::normal(to_eigen(cfg.noise_sigma), g, cfg.noise_mode);
        if (cfg.noise_type == "uniform")
            return NoiseSpec::uniform(to_eigen(cfg.noise_a), to_eigen(cfg.noise_b), g,
                                      cfg.noise_mode);
        if (cfg.noise_type == "exponential")
            return NoiseSpec::exponential(to_eigen(cfg.noise_rate), g, cfg.noise_mode);
        return NoiseSpec::beta(to_eigen(cfg.noise_alpha), to_eigen(cfg.noise_beta), g,
                               cfg.noise_mode);
    }();

    return make_model(std::move(state), std::move(input), std::move(dist), std::move(dynamics),
                      std::move(noise));
}

Spec build_spec(const Config& cfg) {
    const SpecKind kind = spec_kind_from_string(cfg.spec_type);
    Spec spec;
    spec.kind = kind;
    spec.horizon = cfg.time_steps;
    if (cfg.target) spec.target = Box(to_eigen(cfg.target->lb), to_eigen(cfg.target->ub));
    if (cfg.avoid) spec.avoid = Box(to_eigen(cfg.avoid->lb), to_eigen(cfg.avoid->ub));
    return spec;
}

SynthesisOptions build_options(const Config& cfg) {
    SynthesisOptions opts;
    opts.mode = cfg.mode == "ofa" ? SynthesisMode::ofa : SynthesisMode::matrix;
    opts.threads = cfg.threads;
    opts.memory_budget = cfg.mem_budget;
    return opts;
}

Config benchmark_chain_config(int n) {
    if (n < 1) throw ConfigError("benchmark_chain_config: dimension must be positive");
    Config cfg;
    cfg.states.dim = n;
    cfg.states.lb.assign(static_cast<std::size_t>(n), 0.0);
    cfg.states.ub.assign(static_cast<std::size_t>(n), 1.0);
    cfg.states.eta.assign(static_cast<std::size_t>(n), 1.0);
    cfg.inputs.dim = 1;
    cfg.inputs.lb = {0.0};
    cfg.inputs.ub = {0.0};
    cfg.inputs.eta = {1.0};
    for (int i = 0; i < n; ++i)
        cfg.dynamics.push_back("0.9*x" + std::to_string(i) + " + 0*u0");
    cfg.noise_type = "normal";
    cfg.noise_sigma.assign(static_cast<std::size_t>(n), 0.5);
    cfg.cutting_probability = 0.05;
    cfg.spec_type = "safety";
    cfg.time_steps = 6;
    cfg.mode = "matrix";
    return cfg;
}

} // namespace gridmdp
