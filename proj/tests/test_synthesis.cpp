#include "gridmdp/synthesis.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace gridmdp;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

UniformGrid singleton_input() { return make_grid(vec({0.0}), vec({0.0}), vec({1.0})); }

SystemModel model_1d(const char* rhs, UniformGrid state, UniformGrid input, NoiseSpec noise,
                     UniformGrid dist = UniformGrid{}) {
    const Dims dims{1, 1, dist.dim()};
    std::vector<Expr> dyn{parse_expression(rhs, dims)};
    return make_model(std::move(state), std::move(input), std::move(dist), std::move(dyn),
                      std::move(noise));
}

// two-cell chain whose kernel is exactly [[0.9, 0], [0, 0.9]] (0.1 leaks off-grid)
SystemModel chain_09() {
    return model_1d("x0 + ite(x0 < 0.5, -0.1, 0.1)",
                    make_grid(vec({0.0}), vec({1.0}), vec({1.0})), singleton_input(),
                    NoiseSpec::uniform(vec({-0.5}), vec({0.5}), 0.0));
}

// richer fixture: 2-d, 3 inputs, 3 disturbances, normal noise
SystemModel fixture_2d() {
    const Dims dims{2, 1, 1};
    std::vector<Expr> dyn{parse_expression("0.7*x0 + 0.5*u0 + 0.2*w0", dims),
                          parse_expression("0.8*x1 - 0.3*u0 + 0.1*w0", dims)};
    return make_model(make_grid(vec({-2, -2}), vec({2, 2}), vec({0.5, 0.5})),
                      make_grid(vec({-1.0}), vec({1.0}), vec({1.0})),
                      make_grid(vec({-0.4}), vec({0.4}), vec({0.4})), std::move(dyn),
                      NoiseSpec::normal(vec({0.35, 0.45}), 1e-3));
}

Eigen::MatrixXd densify(const TransitionMatrix& tm, Index n_x) {
    Eigen::MatrixXd T(tm.rows(), n_x);
    for (Index r = 0; r < tm.rows(); ++r)
        for (Index l = 0; l < n_x; ++l) T(r, l) = tm.prob(r, l);
    return T;
}

void check_against_dense_oracle(const SystemModel& m, const Spec& spec) {
    // densified kernel feeds the serial Alg.-style recursion; the windowed /
    // parallel / on-the-fly paths must reproduce it
    TransitionMatrix tm = build_matrix(m, 1);
    const Eigen::MatrixXd dense = densify(tm, m.n_states());
    Eigen::VectorXd t0_dense;
    const Eigen::VectorXd* t0_ptr = nullptr;
    TargetHitVector t0;
    if (spec.is_reach()) {
        t0 = build_target_hit(m, spec, 1);
        t0_dense = t0.matrix();
        t0_ptr = &t0_dense;
    }
    const auto want = oracle::dense_synthesis(m.state, m.input, m.disturbance, dense, t0_ptr, spec);

    for (int threads : {1, 2, 5}) {
        for (SynthesisMode mode : {SynthesisMode::matrix, SynthesisMode::ofa}) {
            SynthesisOptions opts;
            opts.threads = threads;
            opts.mode = mode;
            const SynthesisResult res = synthesize(m, spec, opts);
            REQUIRE(res.values.rows() == want.values.rows());
            CHECK((res.values - want.values).cwiseAbs().maxCoeff() <= 1e-12);
            for (Index ix = 0; ix < m.n_states(); ++ix) {
                for (int k = 0; k < spec.horizon; ++k) {
                    CHECK(res.policy(ix, k) == static_cast<std::uint32_t>(want.policy(ix, k)));
                    CHECK(res.worst_dist(ix, k) == static_cast<std::uint32_t>(want.worst(ix, k)));
                }
            }
        }
    }
}

} // namespace

TEST_CASE("two-cell chain: hand-computed safety values") {
    const SystemModel m = chain_09();
    const TransitionMatrix tm = build_matrix(m, 1);
    REQUIRE(tm.rows() == 2);
    CHECK(tm.prob(0, 0) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(tm.prob(0, 1) == 0.0);
    CHECK(tm.prob(1, 1) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(tm.prob(1, 0) == 0.0);

    for (SynthesisMode mode : {SynthesisMode::matrix, SynthesisMode::ofa}) {
        SynthesisOptions opts;
        opts.mode = mode;
        const SynthesisResult res = synthesize(m, make_safety(2), opts);
        CHECK(res.values(0, 2) == 1.0);
        CHECK(res.values(0, 1) == doctest::Approx(0.9).epsilon(1e-14));
        CHECK(res.values(0, 0) == doctest::Approx(0.81).epsilon(1e-14));
        CHECK(res.values(1, 0) == doctest::Approx(0.81).epsilon(1e-14));
    }
}

TEST_CASE("absorbing safe system: values pinned at one") {
    // noise support inside the own cell: self-loop probability exactly 1
    const SystemModel m = model_1d("x0 + 0*u0", make_grid(vec({0.0}), vec({1.0}), vec({1.0})),
                                   singleton_input(),
                                   NoiseSpec::uniform(vec({-0.25}), vec({0.25}), 0.0));
    const SynthesisResult res = synthesize(m, make_safety(5));
    CHECK((res.values.array() == 1.0).all());
}

TEST_CASE("single-step reachability reduces to the target-hit vector") {
    const SystemModel m = model_1d("x0 + 0.3*u0", make_grid(vec({0.0}), vec({2.0}), vec({0.25})),
                                   make_grid(vec({-1.0}), vec({1.0}), vec({1.0})),
                                   NoiseSpec::normal(vec({0.4}), 1e-4));
    const Spec spec = make_reachability(1, Box(vec({1.5}), vec({2.0})));
    const TargetHitVector t0 = build_target_hit(m, spec, 1);
    const SynthesisResult res = synthesize(m, spec);
    const auto absorb = absorbing_states(m.state, spec);
    for (Index ix = 0; ix < m.n_states(); ++ix) {
        if (absorb[static_cast<std::size_t>(ix)]) {
            CHECK(res.values(ix, 0) == 0.0);
            continue;
        }
        double best = -1.0;
        for (Index iu = 0; iu < m.n_inputs(); ++iu)
            best = std::max(best, t0[ix * m.n_inputs() + iu]);
        CHECK(res.values(ix, 0) == doctest::Approx(best).epsilon(1e-13));
    }
}

TEST_CASE("bellman_step basics") {
    const SystemModel m = fixture_2d();
    TransitionMatrix tm = build_matrix(m, 2);
    const Spec spec = make_safety(3);

    SUBCASE("zero next value gives zero") {
        Eigen::VectorXd v_out;
        std::vector<std::uint32_t> pol(static_cast<std::size_t>(m.n_states()));
        bellman_step(m, spec, &tm, nullptr, Eigen::VectorXd::Zero(m.n_states()), v_out,
                     pol.data(), nullptr, 1);
        CHECK((v_out.array() == 0.0).all());
    }
    SUBCASE("unit next value gives max-min row sums") {
        Eigen::VectorXd v_out;
        bellman_step(m, spec, &tm, nullptr, Eigen::VectorXd::Ones(m.n_states()), v_out, nullptr,
                     nullptr, 1);
        for (Index ix = 0; ix < m.n_states(); ++ix) {
            double best = -1.0;
            for (Index iu = 0; iu < m.n_inputs(); ++iu) {
                double mn = 2.0;
                for (Index iw = 0; iw < m.n_disturbances(); ++iw)
                    mn = std::min(mn, tm.row_sum(tm.row_index(ix, iu, iw)));
                best = std::max(best, mn);
            }
            CHECK(v_out[ix] == doctest::Approx(std::min(1.0, best)).epsilon(1e-13));
        }
    }
    SUBCASE("singleton input and disturbance: plain matrix-vector product") {
        const SystemModel m1 = model_1d(
            "0.6*x0 + u0", make_grid(vec({-1.0}), vec({1.0}), vec({0.25})), singleton_input(),
            NoiseSpec::normal(vec({0.3}), 1e-4));
        TransitionMatrix tm1 = build_matrix(m1, 1);
        Eigen::VectorXd v_next(m1.n_states());
        for (Index i = 0; i < m1.n_states(); ++i) v_next[i] = 0.1 + 0.8 * (i % 3) / 2.0;
        Eigen::VectorXd v_out;
        bellman_step(m1, make_safety(1), &tm1, nullptr, v_next, v_out, nullptr, nullptr, 1);
        const Eigen::VectorXd want = densify(tm1, m1.n_states()) * v_next;
        CHECK((v_out - want).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("matrix, ofa, serial, parallel all match the dense recursion") {
    SUBCASE("safety on the 2-d fixture") {
        check_against_dense_oracle(fixture_2d(), make_safety(4));
    }
    SUBCASE("reach-avoid on the 2-d fixture") {
        check_against_dense_oracle(
            fixture_2d(),
            make_reach_avoid(4, Box(vec({1.0, 1.0}), vec({2.0, 2.0})),
                             Box(vec({-0.5, -0.5}), vec({0.5, 0.5}))));
    }
    SUBCASE("reachability with uniform noise") {
        const SystemModel m = model_1d(
            "0.8*x0 + 0.4*u0", make_grid(vec({0.0}), vec({3.0}), vec({0.25})),
            make_grid(vec({-1.0}), vec({1.0}), vec({0.5})),
            NoiseSpec::uniform(vec({-0.3}), vec({0.5}), 0.0));
        check_against_dense_oracle(m, make_reachability(3, Box(vec({2.0}), vec({3.0}))));
    }
    SUBCASE("safety with exponential noise and disturbance") {
        const SystemModel m = model_1d(
            "0.5*x0 + 0.3*u0 + 0.2*w0", make_grid(vec({0.0}), vec({3.0}), vec({0.25})),
            make_grid(vec({0.0}), vec({1.0}), vec({0.5})),
            NoiseSpec::exponential(vec({2.0}), 1e-4),
            make_grid(vec({-0.2}), vec({0.2}), vec({0.2})));
        check_against_dense_oracle(m, make_safety(3));
    }
    SUBCASE("safety with beta noise") {
        const SystemModel m = model_1d(
            "0.4*x0 + 0.2*u0", make_grid(vec({0.0}), vec({2.0}), vec({0.25})),
            make_grid(vec({0.0}), vec({0.5}), vec({0.5})),
            NoiseSpec::beta(vec({2.0}), vec({3.0}), 0.0));
        check_against_dense_oracle(m, make_safety(3));
    }
}

TEST_CASE("value monotonicity and range") {
    const SystemModel m = fixture_2d();
    SUBCASE("safety: non-increasing in remaining horizon") {
        const SynthesisResult res = synthesize(m, make_safety(6));
        CHECK((res.values.array() >= 0.0).all());
        CHECK((res.values.array() <= 1.0).all());
        for (int k = 0; k < 6; ++k)
            CHECK(((res.values.col(k + 1) - res.values.col(k)).array() >= -1e-12).all());
    }
    SUBCASE("reach: non-decreasing in remaining horizon") {
        const Spec spec =
            make_reach_avoid(6, Box(vec({1.0, 1.0}), vec({2.0, 2.0})),
                             Box(vec({-2.0, -2.0}), vec({-1.0, -1.0})));
        const SynthesisResult res = synthesize(m, spec);
        CHECK((res.values.array() >= 0.0).all());
        CHECK((res.values.array() <= 1.0).all());
        for (int k = 0; k < 6; ++k)
            CHECK(((res.values.col(k) - res.values.col(k + 1)).array() >= -1e-12).all());
    }
}

TEST_CASE("singleton disturbance equals the disturbance-free model") {
    const SystemModel with_w = model_1d(
        "0.8*x0 + 0.5*u0 + 0*w0", make_grid(vec({-1.0}), vec({1.0}), vec({0.25})),
        make_grid(vec({-1.0}), vec({1.0}), vec({0.5})), NoiseSpec::normal(vec({0.3}), 1e-4),
        make_grid(vec({0.0}), vec({0.0}), vec({1.0})));
    const SystemModel without = model_1d(
        "0.8*x0 + 0.5*u0", make_grid(vec({-1.0}), vec({1.0}), vec({0.25})),
        make_grid(vec({-1.0}), vec({1.0}), vec({0.5})), NoiseSpec::normal(vec({0.3}), 1e-4));
    CHECK(with_w.n_disturbances() == 1);
    CHECK(without.n_disturbances() == 1);
    const SynthesisResult a = synthesize(with_w, make_safety(4));
    const SynthesisResult b = synthesize(without, make_safety(4));
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.policy == b.policy));
}

TEST_CASE("scaling every stored probability preserves the safety policy") {
    const SystemModel m = fixture_2d();
    const Spec spec = make_safety(4);
    TransitionMatrix tm = build_matrix(m, 1);
    const SynthesisResult base = synthesize_with_matrix(m, tm, nullptr, spec);

    const double c = 0.37;
    TransitionMatrix scaled = build_matrix(m, 1);
    scaled.payload() *= c;
    const SynthesisResult got = synthesize_with_matrix(m, scaled, nullptr, spec);
    CHECK((got.policy == base.policy));
    CHECK((got.worst_dist == base.worst_dist));
    for (int k = 0; k < spec.horizon; ++k) {
        const double factor = std::pow(c, spec.horizon - k);
        CHECK((got.values.col(k) - factor * base.values.col(k)).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("query_policy") {
    SUBCASE("single-point input grid always returns it") {
        const SystemModel m = model_1d(
            "x0 + 0*u0", make_grid(vec({0.0}), vec({1.0}), vec({0.5})), singleton_input(),
            NoiseSpec::normal(vec({0.2}), 1e-3));
        const SynthesisResult res = synthesize(m, make_safety(3));
        CHECK(query_policy(res, vec({0.6}), 2)[0] == 0.0);
    }
    SUBCASE("equals a direct recomputation of the argmax row") {
        const SystemModel m = fixture_2d();
        const Spec spec = make_safety(4);
        TransitionMatrix tm = build_matrix(m, 1);
        const SynthesisResult res = synthesize_with_matrix(m, tm, nullptr, spec);
        Eigen::VectorXd v_out;
        std::vector<std::uint32_t> pol(static_cast<std::size_t>(m.n_states()));
        bellman_step(m, spec, &tm, nullptr, res.values.col(1), v_out, pol.data(), nullptr, 1);
        const Vector x = vec({0.0, 0.0});
        const Index ix = point_to_index(m.state, x);
        CHECK(query_policy(res, x, 1) ==
              index_to_point(m.input, static_cast<Index>(pol[static_cast<std::size_t>(ix)])));
    }
    SUBCASE("errors") {
        const SystemModel m = model_1d(
            "x0 + 0*u0", make_grid(vec({0.0}), vec({1.0}), vec({0.5})), singleton_input(),
            NoiseSpec::normal(vec({0.2}), 1e-3));
        const SynthesisResult res = synthesize(m, make_safety(3));
        CHECK_THROWS_AS(query_policy(res, vec({5.0}), 1), std::out_of_range);
        CHECK_THROWS_AS(query_policy(res, vec({0.5}), 0), std::out_of_range);
        CHECK_THROWS_AS(query_policy(res, vec({0.5}), 4), std::out_of_range);
    }
}

TEST_CASE("matrix mode respects the memory budget and points at ofa") {
    const SystemModel m = fixture_2d();
    SynthesisOptions opts;
    opts.mode = SynthesisMode::matrix;
    opts.memory_budget = 1000;
    CHECK_THROWS_WITH_AS(synthesize(m, make_safety(2), opts), doctest::Contains("ofa"),
                         MemoryError);
    opts.mode = SynthesisMode::ofa;
    CHECK_NOTHROW(synthesize(m, make_safety(2), opts)); // budget only binds matrix mode
}
