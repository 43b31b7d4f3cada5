#include "gridmdp/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gridmdp {

namespace {

constexpr const char* kResultsMagic = "gridmdp-results";
constexpr const char* kMatrixMagic = "gridmdp-matrix";
constexpr int kVersion = 1;

std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fmt_vec(const Vector& v) {
    std::string s = "{";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += fmt_double(v[i]);
    }
    return s + "}";
}

// little-endian scalar encoding, host-endianness agnostic
void put_u64(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 8);
}
void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}
void put_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    put_u64(os, u);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("truncated payload");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}
std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("truncated payload");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}
double get_f64(std::istream& is) {
    const std::uint64_t u = get_u64(is);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

// minimal manifest reader: "key = value;" lines until the "payload" marker
class Manifest {
public:
    Manifest(std::istream& is, const char* magic) {
        std::string line;
        if (!std::getline(is, line)) throw IoError("empty container");
        std::istringstream head(line);
        std::string m;
        int version = 0;
        head >> m >> version;
        if (m != magic) throw IoError("bad magic line '" + line + "'");
        if (version != kVersion)
            throw IoError("unsupported container version " + std::to_string(version));
        while (std::getline(is, line)) {
            if (line == "payload") return;
            const auto eq = line.find('=');
            if (eq == std::string::npos || line.empty() || line.back() != ';')
                throw IoError("malformed manifest line '" + line + "'");
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t");
                const auto e = s.find_last_not_of(" \t");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            kv_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1, line.size() - eq - 2));
        }
        throw IoError("missing payload marker");
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    const std::string& str(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw IoError("manifest key '" + key + "' missing");
        return it->second;
    }
    std::int64_t integer(const std::string& key) const { return std::stoll(str(key)); }
    double number(const std::string& key) const { return std::stod(str(key)); }
    Vector vec(const std::string& key) const {
        const std::string& s = str(key);
        if (s.size() < 2 || s.front() != '{' || s.back() != '}')
            throw IoError("manifest key '" + key + "' is not a vector");
        std::vector<double> out;
        std::string inner = s.substr(1, s.size() - 2);
        std::istringstream iss(inner);
        std::string item;
        while (std::getline(iss, item, ',')) out.push_back(std::stod(item));
        return Eigen::Map<const Vector>(out.data(), static_cast<Eigen::Index>(out.size()));
    }

private:
    std::map<std::string, std::string> kv_;
};

void write_grid(std::ostream& os, const char* prefix, const UniformGrid& g) {
    os << prefix << ".dim = " << g.dim() << ";\n";
    if (g.dim() == 0) return;
    os << prefix << ".lb = " << fmt_vec(g.lb()) << ";\n";
    os << prefix << ".ub = " << fmt_vec(g.ub()) << ";\n";
    os << prefix << ".eta = " << fmt_vec(g.eta()) << ";\n";
}

UniformGrid read_grid(const Manifest& m, const std::string& prefix) {
    if (m.integer(prefix + ".dim") == 0) return UniformGrid{};
    return make_grid(m.vec(prefix + ".lb"), m.vec(prefix + ".ub"), m.vec(prefix + ".eta"));
}

} // namespace

// ---------------------------------------------------------------------------
// results container
// ---------------------------------------------------------------------------

void write_results(const SynthesisResult& res, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");

    const Index n_x = res.values.rows();
    const int T = res.spec.horizon;
    os << kResultsMagic << ' ' << kVersion << '\n';
    os << "mode = " << (res.mode == SynthesisMode::matrix ? "matrix" : "ofa") << ";\n";
    os << "gamma = " << fmt_double(res.gamma) << ";\n";
    os << "spec.type = " << to_string(res.spec.kind) << ";\n";
    os << "spec.time_steps = " << T << ";\n";
    if (res.spec.target.dim() > 0) {
        os << "target.lb = " << fmt_vec(res.spec.target.lo) << ";\n";
        os << "target.ub = " << fmt_vec(res.spec.target.hi) << ";\n";
    }
    if (res.spec.avoid.dim() > 0) {
        os << "avoid.lb = " << fmt_vec(res.spec.avoid.lo) << ";\n";
        os << "avoid.ub = " << fmt_vec(res.spec.avoid.hi) << ";\n";
    }
    write_grid(os, "states", res.state_grid);
    write_grid(os, "inputs", res.input_grid);
    write_grid(os, "disturbances", res.disturbance_grid);
    os << "array.values = f64 " << n_x << " " << (T + 1) << ";\n";
    os << "array.policy = u32 " << n_x << " " << T << ";\n";
    os << "array.worst_dist = u32 " << n_x << " " << T << ";\n";
    os << "array.absorbing = u8 " << res.absorbing.size() << " 1;\n";
    os << "payload\n";

    // row-major (state-major) payloads
    for (Index i = 0; i < n_x; ++i)
        for (int k = 0; k <= T; ++k) put_f64(os, res.values(i, k));
    for (Index i = 0; i < n_x; ++i)
        for (int k = 0; k < T; ++k) put_u32(os, res.policy(i, k));
    for (Index i = 0; i < n_x; ++i)
        for (int k = 0; k < T; ++k) put_u32(os, res.worst_dist(i, k));
    for (std::uint8_t b : res.absorbing) os.put(static_cast<char>(b));
    if (!os) throw IoError("failed while writing '" + path + "'");
}

SynthesisResult read_results(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    Manifest m(is, kResultsMagic);

    SynthesisResult res;
    res.mode = m.str("mode") == "matrix" ? SynthesisMode::matrix : SynthesisMode::ofa;
    res.gamma = m.number("gamma");
    res.spec.kind = spec_kind_from_string(m.str("spec.type"));
    res.spec.horizon = static_cast<int>(m.integer("spec.time_steps"));
    if (m.has("target.lb")) res.spec.target = Box(m.vec("target.lb"), m.vec("target.ub"));
    if (m.has("avoid.lb")) res.spec.avoid = Box(m.vec("avoid.lb"), m.vec("avoid.ub"));
    res.state_grid = read_grid(m, "states");
    res.input_grid = read_grid(m, "inputs");
    res.disturbance_grid = read_grid(m, "disturbances");

    std::istringstream vshape(m.str("array.values"));
    std::string tag;
    Index n_x = 0;
    int cols = 0;
    vshape >> tag >> n_x >> cols;
    if (tag != "f64" || n_x != res.state_grid.size() || cols != res.spec.horizon + 1)
        throw IoError("values array shape disagrees with the manifest");
    std::istringstream ashape(m.str("array.absorbing"));
    Index n_abs = 0;
    int one = 0;
    ashape >> tag >> n_abs >> one;
    if (tag != "u8" || (n_abs != 0 && n_abs != n_x))
        throw IoError("absorbing array shape disagrees with the manifest");

    const int T = res.spec.horizon;
    res.values.resize(n_x, T + 1);
    res.policy.resize(n_x, T);
    res.worst_dist.resize(n_x, T);
    for (Index i = 0; i < n_x; ++i)
        for (int k = 0; k <= T; ++k) res.values(i, k) = get_f64(is);
    for (Index i = 0; i < n_x; ++i)
        for (int k = 0; k < T; ++k) res.policy(i, k) = get_u32(is);
    for (Index i = 0; i < n_x; ++i)
        for (int k = 0; k < T; ++k) res.worst_dist(i, k) = get_u32(is);
    res.absorbing.resize(static_cast<std::size_t>(n_abs));
    if (n_abs > 0) {
        is.read(reinterpret_cast<char*>(res.absorbing.data()), n_abs);
        if (!is) throw IoError("truncated payload");
    }
    // must be exactly at EOF
    char extra;
    if (is.get(extra)) throw IoError("trailing bytes after the declared payload");
    return res;
}

// ---------------------------------------------------------------------------
// matrix dump
// ---------------------------------------------------------------------------

void write_matrix(const TransitionMatrix& tm, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << kMatrixMagic << ' ' << kVersion << '\n';
    write_grid(os, "states", tm.state_grid());
    os << "n_inputs = " << tm.n_inputs() << ";\n";
    os << "n_disturbances = " << tm.n_disturbances() << ";\n";
    std::string w = "{";
    for (std::size_t d = 0; d < tm.window_extents().size(); ++d) {
        if (d) w += ", ";
        w += std::to_string(tm.window_extents()[d]);
    }
    os << "window = " << w << "};\n";
    os << "array.origins = i64 " << tm.rows() << " 1;\n";
    os << "array.probs = f64 " << tm.rows() << " " << tm.row_width() << ";\n";
    os << "payload\n";
    for (Index r = 0; r < tm.rows(); ++r) put_u64(os, static_cast<std::uint64_t>(tm.origin(r)));
    const double* p = tm.payload().data();
    for (Index i = 0; i < tm.rows() * tm.row_width(); ++i) put_f64(os, p[i]);
    if (!os) throw IoError("failed while writing '" + path + "'");
}

TransitionMatrix read_matrix(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    Manifest m(is, kMatrixMagic);

    TransitionMatrix tm;
    tm.state_ = read_grid(m, "states");
    tm.n_inputs_ = m.integer("n_inputs");
    tm.n_dist_ = m.integer("n_disturbances");
    const Vector w = m.vec("window");
    tm.extents_.resize(static_cast<std::size_t>(w.size()));
    tm.row_width_ = 1;
    for (Eigen::Index d = 0; d < w.size(); ++d) {
        tm.extents_[static_cast<std::size_t>(d)] = static_cast<Index>(w[d]);
        tm.row_width_ *= tm.extents_[static_cast<std::size_t>(d)];
    }
    tm.rows_ = tm.state_.size() * tm.n_inputs_ * tm.n_dist_;
    tm.origins_.resize(tm.rows_);
    tm.probs_.resize(tm.rows_ * tm.row_width_);
    for (Index r = 0; r < tm.rows_; ++r)
        tm.origins_[r] = static_cast<Index>(get_u64(is));
    for (Index i = 0; i < tm.rows_ * tm.row_width_; ++i) tm.probs_[i] = get_f64(is);
    char extra;
    if (is.get(extra)) throw IoError("trailing bytes after the declared payload");
    return tm;
}

// ---------------------------------------------------------------------------
// PRISM explicit transitions
// ---------------------------------------------------------------------------

void export_prism(const TransitionMatrix& tm, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");

    Index transitions = 0;
    const double* p = tm.payload().data();
    for (Index i = 0; i < tm.rows() * tm.row_width(); ++i)
        if (p[i] > 0.0) ++transitions;

    const Index choices = tm.n_inputs() * tm.n_disturbances();
    os << tm.state_grid().size() << ' ' << tm.rows() << ' ' << transitions << '\n';
    const UniformGrid& g = tm.state_grid();
    for (Index r = 0; r < tm.rows(); ++r) {
        const Index src = r / choices;
        const Index choice = r % choices;
        const double* row = tm.row(r);
        IndexVec origin(static_cast<std::size_t>(g.dim()));
        Index rem = tm.origin(r);
        for (int d = 0; d < g.dim(); ++d) {
            origin[static_cast<std::size_t>(d)] = rem / g.stride(d);
            rem %= g.stride(d);
        }
        detail::visit_slab(g, tm.window_extents(), origin, [&](Index k, Index post) {
            if (row[k] > 0.0)
                os << src << ' ' << choice << ' ' << post << ' ' << fmt_double(row[k]) << '\n';
        });
    }
    if (!os) throw IoError("failed while writing '" + path + "'");
}

} // namespace gridmdp
