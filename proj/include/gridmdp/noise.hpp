#pragma once

#include "gridmdp/common.hpp"

#include <functional>
#include <optional>
#include <random>

namespace gridmdp {

enum class NoiseFamily : std::uint8_t { normal, uniform, exponential, beta, custom };
enum class NoiseMode : std::uint8_t { additive, multiplicative };

/// User-supplied joint density over the noise vector plus a hyper-rectangle
/// enclosing its support. The density must integrate to 1 over the support.
struct CustomDensity {
    std::function<double(const Vector&)> pdf;
    Box support;
};

/// Distribution of the i.i.d. noise term, one coordinate per state dimension
/// (built-in families are independent across dimensions; normal covariance is
/// diagonal). Carries the cutting threshold gamma in [0,1]. Immutable.
class NoiseSpec {
public:
    static NoiseSpec normal(const Vector& sigma, double gamma,
                            NoiseMode mode = NoiseMode::additive);
    static NoiseSpec uniform(const Vector& a, const Vector& b, double gamma,
                             NoiseMode mode = NoiseMode::additive);
    static NoiseSpec exponential(const Vector& rate, double gamma,
                                 NoiseMode mode = NoiseMode::additive);
    static NoiseSpec beta(const Vector& alpha, const Vector& beta_, double gamma,
                          NoiseMode mode = NoiseMode::additive);
    static NoiseSpec custom(CustomDensity density, double gamma,
                            NoiseMode mode = NoiseMode::additive);

    NoiseFamily family() const { return family_; }
    NoiseMode mode() const { return mode_; }
    double gamma() const { return gamma_; }
    int dim() const { return dim_; }
    /// First parameter vector: sigma / a / rate / alpha.
    const Vector& param1() const { return p1_; }
    /// Second parameter vector: b / beta (empty otherwise).
    const Vector& param2() const { return p2_; }
    const CustomDensity& density() const { return custom_; }

    /// P(xi_d in [lo, hi]) for one noise coordinate, via the family's closed-form CDF.
    double axis_mass(int d, double lo, double hi) const;

    /// P(mean + scale * xi_d in [lo, hi]): the per-axis mass after the affine
    /// map of one mode/state combination. scale = 0 is the point-mass
    /// degeneracy at mean (multiplicative noise at a zero state coordinate).
    double axis_transformed_mass(int d, double lo, double hi, double mean, double scale) const;

private:
    NoiseSpec() = default;
    NoiseFamily family_ = NoiseFamily::normal;
    NoiseMode mode_ = NoiseMode::additive;
    double gamma_ = 0.0;
    int dim_ = 0;
    Vector p1_, p2_;
    CustomDensity custom_;
};

/// Per-dimension cutting radius x*: the post-state window is [mu - x*, mu + x*].
///
/// Normal solves the joint density on-axis, PDF(x* e_i | 0, Sigma) = gamma,
/// i.e. x*_i = sigma_i * sqrt(-2 ln(gamma * c)) with c the reciprocal of the
/// density peak; radius 0 in every dimension when gamma >= peak. Exponential
/// solves the same on-axis equation (one-sided support [0, r], padded to the
/// symmetric radius r). Bounded-support families return the symmetric bound
/// max(|support_lo|, |support_hi|), so the window always covers the support.
/// Returns nullopt when cutting is disabled: multiplicative mode, or gamma = 0
/// for the unbounded families (full rows).
std::optional<Vector> cutting_radius(const NoiseSpec& ns);

/// Exact probability that the post state lands in `cell` when the noise-free
/// image is `mean`: the product over dimensions of closed-form CDF differences
/// (custom densities integrate by nested adaptive Simpson quadrature, absolute
/// tolerance 1e-10 per axis). Throws DomainError on quadrature failure.
double cell_probability(const NoiseSpec& ns, const Vector& mean, const Box& cell);

/// Multiplicative-mode variant: dimension i of the noise is scaled by
/// state_i, so the normal case uses std dev sigma_i * |state_i| and
/// state_i = 0 degenerates to a point mass at mean_i.
double cell_probability(const NoiseSpec& ns, const Vector& mean, const Box& cell,
                        const Vector& state);

/// Lower bound on the probability mass the cutting window captures
/// (erf product for normal, CDF(r) product for exponential, 1 otherwise).
double mass_inside(const NoiseSpec& ns);

/// One noise vector draw. Streams for concurrent callers must be split from
/// the master seed with derive_stream_seed.
Vector sample(const NoiseSpec& ns, std::mt19937_64& rng);
Vector sample(const NoiseSpec& ns, std::mt19937_64& rng, const Vector& state);

namespace detail {
/// Regularized incomplete beta function I_x(a, b) by Lentz continued fraction.
double inc_beta(double a, double b, double x);
/// Adaptive Simpson on [a, b], absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol);
} // namespace detail

} // namespace gridmdp
