#include "gridmdp/config.hpp"
#include "gridmdp/io.hpp"

#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gridmdp;

namespace {

const std::string kConfigDir = GRIDMDP_CONFIG_DIR;

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

Config parse_text(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is, "<inline>");
}

const char* kTinyConfig = R"(
states.dim = 1;
states.lb = {-1.0};
states.ub = {1.0};
states.eta = {0.25};
inputs.dim = 1;
inputs.lb = {-0.5};
inputs.ub = {0.5};
inputs.eta = {0.5};
dynamics.x0 = 0.7*x0 + 0.4*u0;
noise.type = normal;
noise.sigma = {0.3};
noise.cutting_probability = 0.001;
spec.type = safety;
spec.time_steps = 3;
)";

SynthesisResult tiny_result() {
    const Config cfg = parse_text(kTinyConfig);
    return synthesize(build_model(cfg), build_spec(cfg), build_options(cfg));
}

std::filesystem::path temp_file(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / "gridmdp_io_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("bundled robot safety config") {
    const Config cfg = load_config(kConfigDir + "/robot_safety.cfg");
    CHECK(cfg.states.dim == 2);
    CHECK(cfg.inputs.dim == 2);
    REQUIRE(cfg.disturbances.has_value());
    CHECK(cfg.disturbances->dim == 1);
    CHECK(cfg.states.eta == std::vector<double>{0.5, 0.5});
    CHECK(cfg.cutting_probability == 0.001);
    CHECK(cfg.time_steps == 8);
    const SystemModel m = build_model(cfg);
    CHECK(m.n_states() == 1681);
    CHECK(m.n_states() * m.n_inputs() == 203401);
    CHECK(m.n_disturbances() == 11);
}

TEST_CASE("bundled 5-d traffic config reproduces the published size") {
    const Config cfg = load_config(kConfigDir + "/traffic5.cfg");
    const SystemModel m = build_model(cfg);
    CHECK(m.n_states() == 17210368);             // 28^5
    CHECK(m.n_states() * m.n_inputs() == 68841472);
}

TEST_CASE("config errors") {
    SUBCASE("missing dynamics for a declared dimension") {
        std::string text = kTinyConfig;
        const auto pos = text.find("states.dim = 1");
        text.replace(pos, 14, "states.dim = 2");
        text.replace(text.find("states.lb = {-1.0}"), 18, "states.lb = {-1.0, -1.0}");
        text.replace(text.find("states.ub = {1.0}"), 17, "states.ub = {1.0, 1.0}");
        text.replace(text.find("states.eta = {0.25}"), 19, "states.eta = {0.25, 0.25}");
        text.replace(text.find("noise.sigma = {0.3}"), 19, "noise.sigma = {0.3, 0.3}");
        CHECK_THROWS_WITH_AS(parse_text(text), doctest::Contains("dynamics.x1"), ConfigError);
    }
    SUBCASE("dimension mismatch") {
        std::string text = kTinyConfig;
        text.replace(text.find("states.lb = {-1.0}"), 18, "states.lb = {-1.0, 3.0}");
        CHECK_THROWS_AS(parse_text(text), ConfigError);
    }
    SUBCASE("statement without semicolon carries the line number") {
        try {
            parse_text("states.dim = 1\n");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("1:") != std::string::npos);
            CHECK(std::string(e.what()).find(";") != std::string::npos);
        }
    }
    SUBCASE("unknown key is rejected") {
        CHECK_THROWS_WITH_AS(parse_text(std::string(kTinyConfig) + "nois.type = normal;\n"),
                             doctest::Contains("unknown key"), ConfigError);
    }
    SUBCASE("duplicate key is rejected") {
        CHECK_THROWS_WITH_AS(parse_text(std::string(kTinyConfig) + "spec.time_steps = 4;\n"),
                             doctest::Contains("duplicate"), ConfigError);
    }
    SUBCASE("reach spec without a target box") {
        std::string text = kTinyConfig;
        text.replace(text.find("spec.type = safety"), 18, "spec.type = reachability");
        const Config cfg = parse_text(text);
        CHECK_THROWS_AS(validate_spec(build_spec(cfg), build_model(cfg).state), ConfigError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_config("/nonexistent/nope.cfg"), IoError);
    }
}

TEST_CASE("config round-trip equality") {
    for (const char* name : {"robot_safety.cfg", "robot_reachavoid.cfg", "bmw7.cfg"}) {
        const Config cfg = load_config(kConfigDir + "/" + name);
        std::ostringstream os;
        save_config(cfg, os);
        std::istringstream is(os.str());
        const Config again = parse_config(is, name);
        CHECK(cfg == again);
    }
}

TEST_CASE("benchmark chain generator sizes") {
    for (int n = 1; n <= 12; ++n) {
        const Config cfg = benchmark_chain_config(n);
        const SystemModel m = build_model(cfg);
        CHECK(m.n_states() == (Index{1} << n));
        CHECK(m.n_inputs() == 1);
    }
}

TEST_CASE("results container round-trip is bit-exact") {
    const SynthesisResult res = tiny_result();
    const auto path = temp_file("tiny_results.bin");
    write_results(res, path.string());
    const SynthesisResult back = read_results(path.string());

    REQUIRE(back.values.rows() == res.values.rows());
    REQUIRE(back.values.cols() == res.values.cols());
    CHECK(std::memcmp(back.values.data(), res.values.data(),
                      sizeof(double) * static_cast<std::size_t>(res.values.size())) == 0);
    CHECK(back.policy == res.policy);
    CHECK(back.worst_dist == res.worst_dist);
    CHECK(back.absorbing == res.absorbing);
    CHECK(back.state_grid == res.state_grid);
    CHECK(back.input_grid == res.input_grid);
    CHECK(back.spec.kind == res.spec.kind);
    CHECK(back.spec.horizon == res.spec.horizon);
    CHECK(back.gamma == res.gamma);
    CHECK(back.mode == res.mode);

    // value at a probe state survives the round trip exactly
    const Index ix = point_to_index(res.state_grid, vec({0.5}));
    CHECK(back.values(ix, 0) == res.values(ix, 0));
}

TEST_CASE("results container corruption is detected") {
    const SynthesisResult res = tiny_result();
    const auto path = temp_file("corrupt.bin");
    write_results(res, path.string());

    SUBCASE("truncated payload") {
        const auto size = std::filesystem::file_size(path);
        std::filesystem::resize_file(path, size - 5);
        CHECK_THROWS_WITH_AS(read_results(path.string()), doctest::Contains("truncated"), IoError);
    }
    SUBCASE("trailing bytes") {
        std::ofstream os(path, std::ios::binary | std::ios::app);
        os.write("xx", 2);
        os.close();
        CHECK_THROWS_WITH_AS(read_results(path.string()), doctest::Contains("trailing"), IoError);
    }
    SUBCASE("bad magic") {
        std::ofstream os(path, std::ios::binary);
        os << "something-else 1\npayload\n";
        os.close();
        CHECK_THROWS_WITH_AS(read_results(path.string()), doctest::Contains("magic"), IoError);
    }
}

TEST_CASE("matrix dump round-trip") {
    const Config cfg = parse_text(kTinyConfig);
    const SystemModel m = build_model(cfg);
    const TransitionMatrix tm = build_matrix(m, 2);
    const auto path = temp_file("kernel.bin");
    write_matrix(tm, path.string());
    const TransitionMatrix back = read_matrix(path.string());
    REQUIRE(back.rows() == tm.rows());
    CHECK(back.row_width() == tm.row_width());
    CHECK(back.window_extents() == tm.window_extents());
    CHECK((back.origins() == tm.origins()).all());
    CHECK(std::memcmp(back.payload().data(), tm.payload().data(),
                      sizeof(double) * static_cast<std::size_t>(tm.payload().size())) == 0);
}

TEST_CASE("PRISM explicit export") {
    SUBCASE("single state with a certain self-loop") {
        std::istringstream is(R"(
states.dim = 1;
states.lb = {0.0};
states.ub = {0.0};
states.eta = {1.0};
inputs.dim = 1;
inputs.lb = {0.0};
inputs.ub = {0.0};
inputs.eta = {1.0};
dynamics.x0 = x0 + 0*u0;
noise.type = uniform;
noise.a = {-0.25};
noise.b = {0.25};
spec.type = safety;
spec.time_steps = 1;
)");
        const Config cfg = parse_config(is, "<loop>");
        const TransitionMatrix tm = build_matrix(build_model(cfg), 1);
        const auto path = temp_file("loop.tra");
        export_prism(tm, path.string());
        std::ifstream in(path);
        std::string line;
        REQUIRE(std::getline(in, line));
        CHECK(line == "1 1 1");
        REQUIRE(std::getline(in, line));
        CHECK(line == "0 0 0 1");
        CHECK(!std::getline(in, line));
    }
    SUBCASE("line count equals the nonzero entries; per-choice sums match row sums") {
        const Config cfg = parse_text(kTinyConfig);
        const SystemModel m = build_model(cfg);
        const TransitionMatrix tm = build_matrix(m, 1);
        const auto path = temp_file("fixture.tra");
        export_prism(tm, path.string());

        std::ifstream in(path);
        Index n_states = 0, n_choices = 0, n_trans = 0;
        in >> n_states >> n_choices >> n_trans;
        CHECK(n_states == m.n_states());
        CHECK(n_choices == tm.rows());
        Index nonzero = 0;
        for (Index i = 0; i < tm.payload().size(); ++i)
            if (tm.payload()[i] > 0.0) ++nonzero;
        CHECK(n_trans == nonzero);

        std::vector<double> sums(static_cast<std::size_t>(tm.rows()), 0.0);
        Index src, choice, dst;
        double prob;
        Index lines = 0;
        while (in >> src >> choice >> dst >> prob) {
            CHECK(prob > 0.0);
            sums[static_cast<std::size_t>(src * m.n_inputs() * m.n_disturbances() + choice)] +=
                prob;
            ++lines;
        }
        CHECK(lines == n_trans);
        for (Index r = 0; r < tm.rows(); ++r)
            CHECK(sums[static_cast<std::size_t>(r)] ==
                  doctest::Approx(tm.row_sum(r)).epsilon(1e-12));
    }
}
