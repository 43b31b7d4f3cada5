#include "gridmdp/noise.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gridmdp;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

Box box1(double lo, double hi) { return Box(vec({lo}), vec({hi})); }

// test-local composite Simpson; independent of the library quadrature
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// decreasing-function root by bisection
template <class F>
double bisect_root(F f, double lo, double hi, double tol = 1e-13) {
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double normal_pdf(double t, double sigma) {
    return std::exp(-t * t / (2.0 * sigma * sigma)) / (sigma * std::sqrt(2.0 * M_PI));
}

} // namespace

TEST_CASE("cutting radius: normal closed form vs root-finding oracle") {
    SUBCASE("1-d unit sigma, gamma 1e-3") {
        const NoiseSpec ns = NoiseSpec::normal(vec({1.0}), 1e-3);
        const auto r = cutting_radius(ns);
        REQUIRE(r.has_value());
        const double closed = std::sqrt(-2.0 * std::log(1e-3 * std::sqrt(2.0 * M_PI)));
        CHECK((*r)[0] == doctest::Approx(closed).epsilon(1e-12));
        const double root =
            bisect_root([&](double t) { return normal_pdf(t, 1.0) - 1e-3; }, 0.0, 50.0);
        CHECK((*r)[0] == doctest::Approx(root).epsilon(1e-9));
        CHECK((*r)[0] == doctest::Approx(3.4616).epsilon(2e-3)); // quoted rounding
    }
    SUBCASE("2-d robot noise: joint on-axis solve") {
        const double s = std::sqrt(0.75);
        const NoiseSpec ns = NoiseSpec::normal(vec({s, s}), 1e-3);
        const auto r = cutting_radius(ns);
        REQUIRE(r.has_value());
        // joint on-axis density: peak * exp(-t^2 / (2 s^2))
        const double peak = 1.0 / (2.0 * M_PI * 0.75);
        const double root =
            bisect_root([&](double t) { return peak * std::exp(-t * t / (2 * s * s)) - 1e-3; },
                        0.0, 50.0);
        CHECK((*r)[0] == doctest::Approx(root).epsilon(1e-9));
        CHECK((*r)[1] == doctest::Approx(root).epsilon(1e-9));
    }
    SUBCASE("gamma at or above the peak gives radius zero") {
        const NoiseSpec ns = NoiseSpec::normal(vec({1.0}), 0.5); // peak ~0.3989
        const auto r = cutting_radius(ns);
        REQUIRE(r.has_value());
        CHECK((*r)[0] == 0.0);
    }
    SUBCASE("gamma 0 disables cutting") {
        CHECK(!cutting_radius(NoiseSpec::normal(vec({1.0}), 0.0)).has_value());
    }
    SUBCASE("multiplicative mode disables cutting") {
        CHECK(!cutting_radius(NoiseSpec::normal(vec({1.0}), 1e-3, NoiseMode::multiplicative))
                   .has_value());
    }
}

TEST_CASE("cutting radius: bounded and one-sided supports") {
    SUBCASE("uniform [-1,1] has radius 1 for any gamma") {
        for (double g : {0.0, 1e-3, 0.5}) {
            const auto r = cutting_radius(NoiseSpec::uniform(vec({-1.0}), vec({1.0}), g));
            REQUIRE(r.has_value());
            CHECK((*r)[0] == 1.0);
        }
    }
    SUBCASE("asymmetric uniform support is fully covered") {
        const auto r = cutting_radius(NoiseSpec::uniform(vec({0.0}), vec({2.0}), 1e-3));
        CHECK((*r)[0] == 2.0);
    }
    SUBCASE("beta support [0,1] gives radius 1") {
        const auto r = cutting_radius(NoiseSpec::beta(vec({2.0}), vec({3.0}), 0.1));
        CHECK((*r)[0] == 1.0);
    }
    SUBCASE("exponential solves the on-axis density") {
        const NoiseSpec ns = NoiseSpec::exponential(vec({2.0}), 0.1);
        const auto r = cutting_radius(ns);
        REQUIRE(r.has_value());
        const double root =
            bisect_root([&](double t) { return 2.0 * std::exp(-2.0 * t) - 0.1; }, 0.0, 100.0);
        CHECK((*r)[0] == doctest::Approx(root).epsilon(1e-9));
    }
    SUBCASE("custom support bound") {
        CustomDensity cd;
        cd.pdf = [](const Vector& x) { return x[0] >= -0.5 && x[0] <= 1.5 ? 0.5 : 0.0; };
        cd.support = box1(-0.5, 1.5);
        const auto r = cutting_radius(NoiseSpec::custom(cd, 0.0));
        CHECK((*r)[0] == 1.5);
    }
}

TEST_CASE("gamma validation") {
    CHECK_THROWS_AS(NoiseSpec::normal(vec({1.0}), -0.1), ConfigError);
    CHECK_THROWS_AS(NoiseSpec::normal(vec({1.0}), 1.1), ConfigError);
    CHECK_THROWS_AS(NoiseSpec::normal(vec({0.0}), 0.1), ConfigError);
    CHECK_THROWS_AS(NoiseSpec::uniform(vec({1.0}), vec({1.0}), 0.1), ConfigError);
    CHECK_THROWS_AS(NoiseSpec::exponential(vec({-1.0}), 0.1), ConfigError);
    CHECK_THROWS_AS(NoiseSpec::beta(vec({0.0}), vec({1.0}), 0.1), ConfigError);
}

TEST_CASE("cell_probability: normal vs erf and quadrature oracles") {
    const NoiseSpec ns = NoiseSpec::normal(vec({1.0}), 1e-3);
    const double p = cell_probability(ns, vec({0.0}), box1(-1.0, 1.0));
    CHECK(p == doctest::Approx(std::erf(1.0 / std::sqrt(2.0))).epsilon(1e-14));
    CHECK(p == doctest::Approx(0.6826895).epsilon(1e-6));
    const double q = simpson([&](double t) { return normal_pdf(t, 1.0); }, -1.0, 1.0);
    CHECK(p == doctest::Approx(q).epsilon(1e-10));

    CHECK(cell_probability(ns, vec({0.0}), box1(-40.0, 40.0)) == doctest::Approx(1.0).epsilon(1e-15));
    // shifted mean
    const double ps = cell_probability(ns, vec({0.5}), box1(-1.0, 1.0));
    const double qs = simpson([&](double t) { return normal_pdf(t - 0.5, 1.0); }, -1.0, 1.0);
    CHECK(ps == doctest::Approx(qs).epsilon(1e-10));
}

TEST_CASE("cell_probability: uniform, exponential, beta vs quadrature oracles") {
    SUBCASE("uniform") {
        const NoiseSpec ns = NoiseSpec::uniform(vec({-1.0}), vec({3.0}), 0.0);
        CHECK(cell_probability(ns, vec({0.0}), box1(0.0, 1.0)) == doctest::Approx(0.25));
        CHECK(cell_probability(ns, vec({2.0}), box1(0.0, 1.5)) ==
              doctest::Approx(0.5 / 4.0)); // overlap [1, 1.5] of [1, 5]
        CHECK(cell_probability(ns, vec({10.0}), box1(0.0, 1.0)) == 0.0);
    }
    SUBCASE("exponential") {
        const NoiseSpec ns = NoiseSpec::exponential(vec({1.5}), 0.0);
        const double p = cell_probability(ns, vec({0.2}), box1(0.5, 2.0));
        const double q =
            simpson([&](double t) { return t < 0.2 ? 0.0 : 1.5 * std::exp(-1.5 * (t - 0.2)); },
                    0.5, 2.0);
        CHECK(p == doctest::Approx(q).epsilon(1e-9));
    }
    SUBCASE("beta") {
        const NoiseSpec ns = NoiseSpec::beta(vec({2.0}), vec({3.0}), 0.0);
        auto beta_pdf = [](double t) {
            return t < 0.0 || t > 1.0 ? 0.0 : 12.0 * t * (1 - t) * (1 - t); // B(2,3) = 1/12
        };
        const double p = cell_probability(ns, vec({0.0}), box1(0.2, 0.7));
        const double q = simpson(beta_pdf, 0.2, 0.7);
        CHECK(p == doctest::Approx(q).epsilon(1e-9));
        // full support
        CHECK(cell_probability(ns, vec({0.0}), box1(-1.0, 2.0)) == doctest::Approx(1.0));
    }
}

TEST_CASE("cell_probability: custom density via nested quadrature") {
    SUBCASE("1-d triangle") {
        CustomDensity cd;
        cd.pdf = [](const Vector& x) { return std::max(0.0, 1.0 - std::fabs(x[0])); };
        cd.support = box1(-1.0, 1.0);
        const NoiseSpec ns = NoiseSpec::custom(cd, 0.0);
        // closed form: integral of 1-|t| over [0, 1] = 0.5
        CHECK(cell_probability(ns, vec({0.0}), box1(0.0, 1.0)) ==
              doctest::Approx(0.5).epsilon(1e-9));
        CHECK(cell_probability(ns, vec({0.0}), box1(-0.5, 0.5)) ==
              doctest::Approx(0.75).epsilon(1e-9));
        // mean shifts the support
        CHECK(cell_probability(ns, vec({2.0}), box1(1.0, 3.0)) ==
              doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("2-d product of triangles") {
        CustomDensity cd;
        cd.pdf = [](const Vector& x) {
            return std::max(0.0, 1.0 - std::fabs(x[0])) * std::max(0.0, 1.0 - std::fabs(x[1]));
        };
        cd.support = Box(vec({-1.0, -1.0}), vec({1.0, 1.0}));
        const NoiseSpec ns = NoiseSpec::custom(cd, 0.0);
        const double p =
            cell_probability(ns, vec({0.0, 0.0}), Box(vec({0.0, -0.5}), vec({1.0, 0.5})));
        CHECK(p == doctest::Approx(0.5 * 0.75).epsilon(1e-8));
    }
}

TEST_CASE("cell_probability: multiplicative mode") {
    const NoiseSpec ns = NoiseSpec::normal(vec({0.5}), 0.0, NoiseMode::multiplicative);
    SUBCASE("state zero degenerates to a point mass") {
        CHECK(cell_probability(ns, vec({0.3}), box1(0.25, 0.75), vec({0.0})) == 1.0);
        CHECK(cell_probability(ns, vec({0.9}), box1(0.25, 0.75), vec({0.0})) == 0.0);
    }
    SUBCASE("state scales the std dev") {
        const double p = cell_probability(ns, vec({0.0}), box1(-1.0, 1.0), vec({2.0}));
        CHECK(p == doctest::Approx(std::erf(1.0 / std::sqrt(2.0))).epsilon(1e-12)); // sigma 1
        const double pn = cell_probability(ns, vec({0.0}), box1(-1.0, 1.0), vec({-2.0}));
        CHECK(pn == doctest::Approx(p).epsilon(1e-12)); // symmetric law
    }
    SUBCASE("state is mandatory") {
        CHECK_THROWS_AS(cell_probability(ns, vec({0.0}), box1(-1.0, 1.0)), ConfigError);
    }
}

TEST_CASE("cell_probability properties") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> um(-2.0, 2.0);
    std::uniform_real_distribution<double> uw(0.01, 3.0);
    const NoiseSpec families[] = {
        NoiseSpec::normal(vec({0.7}), 1e-3),
        NoiseSpec::uniform(vec({-0.5}), vec({1.5}), 0.0),
        NoiseSpec::exponential(vec({1.2}), 1e-3),
        NoiseSpec::beta(vec({2.5}), vec({1.5}), 0.0),
    };
    for (const NoiseSpec& ns : families) {
        for (int t = 0; t < 300; ++t) {
            const double mean = um(rng);
            const double a = um(rng);
            const double b = a + uw(rng);
            const double cut = a + (b - a) * 0.37;
            const double whole = cell_probability(ns, vec({mean}), box1(a, b));
            const double left = cell_probability(ns, vec({mean}), box1(a, cut));
            const double right = cell_probability(ns, vec({mean}), box1(cut, b));
            CHECK(whole >= 0.0);
            CHECK(whole <= 1.0);
            CHECK(left + right == doctest::Approx(whole).epsilon(1e-12));
        }
    }
    // normal symmetry about the mean
    const NoiseSpec ns = NoiseSpec::normal(vec({0.9}), 1e-3);
    for (int t = 0; t < 300; ++t) {
        const double mean = um(rng);
        const double a = uw(rng) * 0.1;
        const double b = a + uw(rng);
        const double plus = cell_probability(ns, vec({mean}), box1(mean + a, mean + b));
        const double minus = cell_probability(ns, vec({mean}), box1(mean - b, mean - a));
        CHECK(plus == doctest::Approx(minus).epsilon(1e-12));
    }
}

TEST_CASE("mass_inside: monotone in gamma and complete as gamma -> 0") {
    const Vector sigma = vec({0.8, 1.3});
    double prev = 1.0;
    for (double g : {1e-12, 1e-8, 1e-5, 1e-3, 1e-2, 1e-1}) {
        const double m = mass_inside(NoiseSpec::normal(sigma, g));
        CHECK(m <= prev + 1e-15);
        prev = m;
    }
    CHECK(mass_inside(NoiseSpec::normal(sigma, 1e-12)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mass_inside(NoiseSpec::uniform(vec({-1.0}), vec({1.0}), 0.5)) == 1.0);
    CHECK(mass_inside(NoiseSpec::normal(sigma, 0.0)) == 1.0); // cutting disabled
}

TEST_CASE("sampling statistics") {
    std::mt19937_64 rng(derive_stream_seed(42, 0));
    SUBCASE("uniform stays in support") {
        const NoiseSpec ns = NoiseSpec::uniform(vec({-1.0}), vec({1.0}), 0.0);
        for (int t = 0; t < 10000; ++t) {
            const Vector s = sample(ns, rng);
            CHECK(s[0] >= -1.0);
            CHECK(s[0] <= 1.0);
        }
    }
    SUBCASE("normal moments over 1e6 draws") {
        const NoiseSpec ns = NoiseSpec::normal(vec({1.0}), 0.0);
        double sum = 0.0, sq = 0.0;
        const int N = 1000000;
        for (int t = 0; t < N; ++t) {
            const double v = sample(ns, rng)[0];
            sum += v;
            sq += v * v;
        }
        const double mean = sum / N;
        const double var = sq / N - mean * mean;
        CHECK(std::fabs(mean) < 4e-3);
        CHECK(std::fabs(var - 1.0) < 1e-2);
    }
    SUBCASE("beta draws stay in [0,1]") {
        const NoiseSpec ns = NoiseSpec::beta(vec({2.0}), vec({5.0}), 0.0);
        double sum = 0.0;
        for (int t = 0; t < 20000; ++t) {
            const double v = sample(ns, rng)[0];
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            sum += v;
        }
        CHECK(sum / 20000 == doctest::Approx(2.0 / 7.0).epsilon(0.05));
    }
    SUBCASE("multiplicative sampling at state zero is exactly zero") {
        const NoiseSpec ns = NoiseSpec::normal(vec({1.0, 1.0}), 0.0, NoiseMode::multiplicative);
        const Vector s = sample(ns, rng, vec({0.0, 0.0}));
        CHECK(s[0] == 0.0);
        CHECK(s[1] == 0.0);
    }
    SUBCASE("identical seeds give identical streams") {
        const NoiseSpec ns = NoiseSpec::normal(vec({1.0}), 0.0);
        std::mt19937_64 a(derive_stream_seed(7, 3)), b(derive_stream_seed(7, 3));
        for (int t = 0; t < 100; ++t) CHECK(sample(ns, a)[0] == sample(ns, b)[0]);
    }
}
