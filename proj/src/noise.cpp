#include "gridmdp/noise.hpp"

#include <cmath>
#include <sstream>

namespace gridmdp {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

void require(bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
}

void check_gamma(double gamma) {
    require(gamma >= 0.0 && gamma <= 1.0, "noise: cutting threshold gamma must lie in [0, 1]");
}

} // namespace

NoiseSpec NoiseSpec::normal(const Vector& sigma, double gamma, NoiseMode mode) {
    check_gamma(gamma);
    require((sigma.array() > 0.0).all(), "noise: normal std deviations must be positive");
    NoiseSpec ns;
    ns.family_ = NoiseFamily::normal;
    ns.mode_ = mode;
    ns.gamma_ = gamma;
    ns.dim_ = static_cast<int>(sigma.size());
    ns.p1_ = sigma;
    return ns;
}

NoiseSpec NoiseSpec::uniform(const Vector& a, const Vector& b, double gamma, NoiseMode mode) {
    check_gamma(gamma);
    require(a.size() == b.size(), "noise: uniform bounds dimension mismatch");
    require((a.array() < b.array()).all(), "noise: uniform support requires a < b");
    NoiseSpec ns;
    ns.family_ = NoiseFamily::uniform;
    ns.mode_ = mode;
    ns.gamma_ = gamma;
    ns.dim_ = static_cast<int>(a.size());
    ns.p1_ = a;
    ns.p2_ = b;
    return ns;
}

NoiseSpec NoiseSpec::exponential(const Vector& rate, double gamma, NoiseMode mode) {
    check_gamma(gamma);
    require((rate.array() > 0.0).all(), "noise: exponential rates must be positive");
    NoiseSpec ns;
    ns.family_ = NoiseFamily::exponential;
    ns.mode_ = mode;
    ns.gamma_ = gamma;
    ns.dim_ = static_cast<int>(rate.size());
    ns.p1_ = rate;
    return ns;
}

NoiseSpec NoiseSpec::beta(const Vector& alpha, const Vector& beta_, double gamma, NoiseMode mode) {
    check_gamma(gamma);
    require(alpha.size() == beta_.size(), "noise: beta shape dimension mismatch");
    require((alpha.array() > 0.0).all() && (beta_.array() > 0.0).all(),
            "noise: beta shapes must be positive");
    NoiseSpec ns;
    ns.family_ = NoiseFamily::beta;
    ns.mode_ = mode;
    ns.gamma_ = gamma;
    ns.dim_ = static_cast<int>(alpha.size());
    ns.p1_ = alpha;
    ns.p2_ = beta_;
    return ns;
}

NoiseSpec NoiseSpec::custom(CustomDensity density, double gamma, NoiseMode mode) {
    check_gamma(gamma);
    require(static_cast<bool>(density.pdf), "noise: custom density requires a pdf callback");
    require(!density.support.empty(), "noise: custom density requires a non-empty support box");
    NoiseSpec ns;
    ns.family_ = NoiseFamily::custom;
    ns.mode_ = mode;
    ns.gamma_ = gamma;
    ns.dim_ = density.support.dim();
    ns.custom_ = std::move(density);
    return ns;
}

// ---------------------------------------------------------------------------
// closed-form 1-d CDF masses
// ---------------------------------------------------------------------------

double NoiseSpec::axis_mass(int d, double lo, double hi) const {
    if (hi <= lo) return 0.0;
    switch (family_) {
        case NoiseFamily::normal: {
            const double s = p1_[d] * kSqrt2;
            return 0.5 * (std::erf(hi / s) - std::erf(lo / s));
        }
        case NoiseFamily::uniform: {
            const double a = p1_[d], b = p2_[d];
            const double ov = std::min(hi, b) - std::max(lo, a);
            return ov > 0.0 ? ov / (b - a) : 0.0;
        }
        case NoiseFamily::exponential: {
            const double l = p1_[d];
            const auto cdf = [l](double t) { return t <= 0.0 ? 0.0 : -std::expm1(-l * t); };
            return cdf(hi) - cdf(lo);
        }
        case NoiseFamily::beta: {
            const double a = p1_[d], b = p2_[d];
            const auto cdf = [&](double t) {
                if (t <= 0.0) return 0.0;
                if (t >= 1.0) return 1.0;
                return detail::inc_beta(a, b, t);
            };
            return cdf(hi) - cdf(lo);
        }
        case NoiseFamily::custom:
            throw DomainError("axis_mass is undefined for custom joint densities");
    }
    return 0.0;
}

double NoiseSpec::axis_transformed_mass(int d, double lo, double hi, double mean,
                                        double scale) const {
    if (scale == 0.0) return (mean >= lo && mean <= hi) ? 1.0 : 0.0;
    double a = (lo - mean) / scale;
    double b = (hi - mean) / scale;
    if (scale < 0.0) std::swap(a, b);
    return axis_mass(d, a, b);
}

// ---------------------------------------------------------------------------
// cutting radii
// ---------------------------------------------------------------------------

std::optional<Vector> cutting_radius(const NoiseSpec& ns) {
    const int n = ns.dim();
    Vector r(n);
    switch (ns.family()) {
        case NoiseFamily::normal: {
            if (ns.mode() == NoiseMode::multiplicative) return std::nullopt;
            if (ns.gamma() == 0.0) return std::nullopt;
            // c = prod_j sqrt(2 pi sigma_j^2) = 1 / peak density
            double log_c = 0.0;
            for (int j = 0; j < n; ++j)
                log_c += 0.5 * std::log(2.0 * M_PI * ns.param1()[j] * ns.param1()[j]);
            const double t = -2.0 * (std::log(ns.gamma()) + log_c);
            if (t <= 0.0) { r.setZero(); return r; } // gamma at or above the peak
            for (int i = 0; i < n; ++i) r[i] = ns.param1()[i] * std::sqrt(t);
            return r;
        }
        case NoiseFamily::exponential: {
            if (ns.mode() == NoiseMode::multiplicative) return std::nullopt;
            if (ns.gamma() == 0.0) return std::nullopt;
            double log_peak = 0.0;
            for (int j = 0; j < n; ++j) log_peak += std::log(ns.param1()[j]);
            const double t = log_peak - std::log(ns.gamma());
            if (t <= 0.0) { r.setZero(); return r; }
            for (int i = 0; i < n; ++i) r[i] = t / ns.param1()[i];
            return r;
        }
        case NoiseFamily::uniform:
            if (ns.mode() == NoiseMode::multiplicative) return std::nullopt;
            for (int i = 0; i < n; ++i)
                r[i] = std::max(std::fabs(ns.param1()[i]), std::fabs(ns.param2()[i]));
            return r;
        case NoiseFamily::beta:
            if (ns.mode() == NoiseMode::multiplicative) return std::nullopt;
            r.setOnes();
            return r;
        case NoiseFamily::custom:
            if (ns.mode() == NoiseMode::multiplicative) return std::nullopt;
            for (int i = 0; i < n; ++i)
                r[i] = std::max(std::fabs(ns.density().support.lo[i]),
                                std::fabs(ns.density().support.hi[i]));
            return r;
    }
    return std::nullopt;
}

double mass_inside(const NoiseSpec& ns) {
    const auto radius = cutting_radius(ns);
    if (!radius) return 1.0;
    switch (ns.family()) {
        case NoiseFamily::normal: {
            double m = 1.0;
            for (int i = 0; i < ns.dim(); ++i)
                m *= std::erf((*radius)[i] / (ns.param1()[i] * kSqrt2));
            return m;
        }
        case NoiseFamily::exponential: {
            double m = 1.0;
            for (int i = 0; i < ns.dim(); ++i) m *= -std::expm1(-ns.param1()[i] * (*radius)[i]);
            return m;
        }
        default:
            return 1.0; // bounded supports are fully covered
    }
}

// ---------------------------------------------------------------------------
// cell probabilities
// ---------------------------------------------------------------------------

namespace {

// Integrates the custom joint pdf over box (in noise coordinates), peeling one
// dimension at a time with adaptive Simpson.
double integrate_custom(const CustomDensity& cd, const Box& box, int level, Vector& point) {
    const int n = box.dim();
    const double lo = std::max(box.lo[level], cd.support.lo[level]);
    const double hi = std::min(box.hi[level], cd.support.hi[level]);
    if (hi <= lo) return 0.0;
    const auto f = [&](double t) -> double {
        point[level] = t;
        if (level + 1 == n) return cd.pdf(point);
        return integrate_custom(cd, box, level + 1, point);
    };
    return detail::adaptive_simpson(f, lo, hi, 1e-10);
}

double cell_probability_impl(const NoiseSpec& ns, const Vector& mean, const Box& cell,
                             const Vector* state) {
    const int n = ns.dim();
    if (mean.size() != n || cell.dim() != n)
        throw ConfigError("cell_probability: dimension mismatch");
    if (ns.mode() == NoiseMode::multiplicative && state == nullptr)
        throw ConfigError("cell_probability: multiplicative mode requires the current state");

    if (ns.family() == NoiseFamily::custom) {
        // transform to noise coordinates: xi_d in [(lo-mean)/s, (hi-mean)/s]
        Box nb{Vector(n), Vector(n)};
        for (int d = 0; d < n; ++d) {
            const double s = state ? (*state)[d] : 1.0;
            if (s == 0.0)
                throw DomainError(
                    "cell_probability: multiplicative custom density degenerates at state 0");
            double a = (cell.lo[d] - mean[d]) / s;
            double b = (cell.hi[d] - mean[d]) / s;
            if (s < 0.0) std::swap(a, b);
            nb.lo[d] = a;
            nb.hi[d] = b;
        }
        // P(mean + s o xi in cell) = integral of pdf over the preimage box
        Vector point(n);
        const double p = integrate_custom(ns.density(), nb, 0, point);
        return std::min(1.0, std::max(0.0, p));
    }

    double p = 1.0;
    for (int d = 0; d < n; ++d) {
        const double s = state ? (*state)[d] : 1.0;
        p *= ns.axis_transformed_mass(d, cell.lo[d], cell.hi[d], mean[d], s);
        if (p == 0.0) break;
    }
    return std::min(1.0, std::max(0.0, p));
}

} // namespace

double cell_probability(const NoiseSpec& ns, const Vector& mean, const Box& cell) {
    return cell_probability_impl(ns, mean, cell, nullptr);
}

double cell_probability(const NoiseSpec& ns, const Vector& mean, const Box& cell,
                        const Vector& state) {
    return cell_probability_impl(ns, mean, cell, &state);
}

// ---------------------------------------------------------------------------
// sampling
// ---------------------------------------------------------------------------

namespace {

double sample_axis(const NoiseSpec& ns, int d, std::mt19937_64& rng) {
    switch (ns.family()) {
        case NoiseFamily::normal: {
            std::normal_distribution<double> dist(0.0, ns.param1()[d]);
            return dist(rng);
        }
        case NoiseFamily::uniform: {
            std::uniform_real_distribution<double> dist(ns.param1()[d], ns.param2()[d]);
            return dist(rng);
        }
        case NoiseFamily::exponential: {
            std::exponential_distribution<double> dist(ns.param1()[d]);
            return dist(rng);
        }
        case NoiseFamily::beta: {
            std::gamma_distribution<double> ga(ns.param1()[d], 1.0);
            std::gamma_distribution<double> gb(ns.param2()[d], 1.0);
            const double u = ga(rng);
            const double v = gb(rng);
            return u / (u + v);
        }
        case NoiseFamily::custom:
            break;
    }
    throw DomainError("sample_axis: unsupported family");
}

// Rejection sampler over the support box; the envelope is a cached estimate of
// the density supremum from a coarse scan, inflated for headroom. Densities
// spikier than the scan resolution are sampled approximately.
double custom_sup_estimate(const CustomDensity& cd) {
    const int n = cd.support.dim();
    int per_dim = 17;
    std::int64_t total = 1;
    for (int d = 0; d < n; ++d) total *= per_dim;
    if (total > 100000) per_dim = 5;
    Vector point(n);
    IndexVec idx(static_cast<std::size_t>(n), 0);
    double sup = 0.0;
    for (;;) {
        for (int d = 0; d < n; ++d) {
            const double t = (per_dim == 1) ? 0.5
                                            : static_cast<double>(idx[static_cast<std::size_t>(d)]) /
                                                  (per_dim - 1);
            point[d] = cd.support.lo[d] + t * (cd.support.hi[d] - cd.support.lo[d]);
        }
        sup = std::max(sup, cd.pdf(point));
        int d = n - 1;
        for (; d >= 0; --d) {
            if (++idx[static_cast<std::size_t>(d)] < per_dim) break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
        if (d < 0) break;
    }
    if (!(sup > 0.0)) throw DomainError("sample: custom density appears to be zero on its support");
    return sup * 1.5;
}

Vector sample_custom(const NoiseSpec& ns, std::mt19937_64& rng) {
    const CustomDensity& cd = ns.density();
    const int n = ns.dim();
    static thread_local const CustomDensity* cached_cd = nullptr;
    static thread_local double cached_sup = 0.0;
    if (cached_cd != &cd) {
        cached_sup = custom_sup_estimate(cd);
        cached_cd = &cd;
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector xi(n);
    for (int tries = 0; tries < 1000000; ++tries) {
        for (int d = 0; d < n; ++d)
            xi[d] = cd.support.lo[d] + unit(rng) * (cd.support.hi[d] - cd.support.lo[d]);
        if (unit(rng) * cached_sup <= cd.pdf(xi)) return xi;
    }
    throw DomainError("sample: rejection sampling for the custom density did not accept");
}

} // namespace

Vector sample(const NoiseSpec& ns, std::mt19937_64& rng) {
    if (ns.family() == NoiseFamily::custom) return sample_custom(ns, rng);
    Vector xi(ns.dim());
    for (int d = 0; d < ns.dim(); ++d) xi[d] = sample_axis(ns, d, rng);
    return xi;
}

Vector sample(const NoiseSpec& ns, std::mt19937_64& rng, const Vector& state) {
    Vector xi = sample(ns, rng);
    if (ns.mode() == NoiseMode::multiplicative) xi.array() *= state.array();
    return xi;
}

// ---------------------------------------------------------------------------
// numeric kernels
// ---------------------------------------------------------------------------

namespace detail {

double inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - inc_beta(b, a, 1.0 - x);

    const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double front = std::exp(std::log(x) * a + std::log1p(-x) * b - lbeta) / a;

    // Lentz's continued fraction
    double f = 1.0, c = 1.0, d = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const int m = i / 2;
        double num;
        if (i == 0)
            num = 1.0;
        else if (i % 2 == 0)
            num = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        else
            num = -((a + m) * (a + b + m) * x) / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        d = 1.0 + num * d;
        if (std::fabs(d) < 1e-30) d = 1e-30;
        d = 1.0 / d;
        c = 1.0 + num / c;
        if (std::fabs(c) < 1e-30) c = 1e-30;
        f *= c * d;
        if (std::fabs(1.0 - c * d) < 1e-15) return std::min(1.0, std::max(0.0, front * (f - 1.0)));
    }
    throw DomainError("inc_beta: continued fraction did not converge");
}

namespace {
double simpson_rec(const std::function<double(double)>& f, double a, double m, double b,
                   double fa, double fm, double fb, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth > 40) throw DomainError("adaptive_simpson: quadrature did not converge");
    if (std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, lm, m, fa, flm, fm, left, tol / 2.0, depth + 1) +
           simpson_rec(f, m, rm, b, fm, frm, fb, right, tol / 2.0, depth + 1);
}
} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    if (b <= a) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, m, b, fa, fm, fb, whole, tol, 0);
}

} // namespace detail

} // namespace gridmdp
