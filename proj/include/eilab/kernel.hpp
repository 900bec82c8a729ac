#pragma once

// Stationary covariance kernels on [-1, 1], their spectral densities
//
//     G(x) = integral over R of Ghat(t) e^{itx} dt,
//
// and the convex-duality quantities built from Ghat = exp(-T(ln|t|)):
// S, T, the Legendre transform T*, its maximizer s*, and the variance-rate
// function F(K) = T*(2K+1) - (2K+1) ln K.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "eilab/error.hpp"
#include "eilab/quadrature.hpp"
#include "eilab/real.hpp"

namespace eilab {

/// G(x) = gamma / (2 sqrt(pi a)) exp(-x^2 / (4a)); Ghat(t) = gamma exp(-a t^2) / (2 pi).
struct GaussianClosed {
    Real a;
};

/// Ghat(t) = gamma c0 exp(-a |t|^b), b > 1.
struct SpectralPower {
    Real a;
    Real b;
    Real c0;
};

/// G(x) = gamma exp(-theta |x|); Ghat(t) = gamma theta / (pi (theta^2 + t^2)).
struct OrnsteinUhlenbeck {
    Real theta;
};

/// Selects gamma so that G(0) = 1 exactly.
struct UnitVariance {};

using KernelScale = std::variant<UnitVariance, Real>;

class KernelSpec {
public:
    using Shape = std::variant<GaussianClosed, SpectralPower, OrnsteinUhlenbeck>;

    KernelSpec(Shape shape, const KernelScale& scale, const PrecisionContext& ctx)
        : shape_(std::move(shape)), gamma_(ctx.from(1)), g0_(ctx.from(1)),
          unit_(std::holds_alternative<UnitVariance>(scale)) {
        validate();
        // Variance per unit gamma.
        Real per_gamma = std::visit(
            [&](const auto& s) -> Real {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, GaussianClosed>) {
                    return 1 / (2 * sqrt(ctx.pi() * s.a));
                } else if constexpr (std::is_same_v<S, SpectralPower>) {
                    // 2 c0 Gamma(1 + 1/b) a^(-1/b)
                    Real inv_b = 1 / s.b;
                    return 2 * s.c0 * tgamma(inv_b + 1) / pow(s.a, inv_b);
                } else {
                    return ctx.from(1);
                }
            },
            shape_);
        if (unit_) {
            gamma_ = 1 / per_gamma;
        } else {
            gamma_ = std::get<Real>(scale);
            if (!(gamma_ > 0)) fail(ErrorKind::InvalidArgument, "kernel scale gamma must be positive");
            g0_ = gamma_ * per_gamma;
        }
    }

    static KernelSpec gaussian(const Real& a, const KernelScale& scale, const PrecisionContext& ctx) {
        return {GaussianClosed{a}, scale, ctx};
    }
    static KernelSpec spectral_power(const Real& a, const Real& b, const Real& c0, const KernelScale& scale,
                                     const PrecisionContext& ctx) {
        return {SpectralPower{a, b, c0}, scale, ctx};
    }
    static KernelSpec ornstein_uhlenbeck(const Real& theta, const KernelScale& scale, const PrecisionContext& ctx) {
        return {OrnsteinUhlenbeck{theta}, scale, ctx};
    }

    /// The kernel exp(-x^2) used by the collapse experiment.
    static KernelSpec unit_gaussian(const PrecisionContext& ctx) {
        return gaussian(ctx.parse("0.25"), UnitVariance{}, ctx);
    }

    [[nodiscard]] const Shape& shape() const { return shape_; }
    [[nodiscard]] const Real& gamma() const { return gamma_; }
    /// G(0), the prior variance.
    [[nodiscard]] const Real& variance() const { return g0_; }
    [[nodiscard]] bool unit_variance() const { return unit_; }

    [[nodiscard]] std::string_view name() const {
        switch (shape_.index()) {
            case 0: return "gaussian";
            case 1: return "spectral_power";
            default: return "ornstein_uhlenbeck";
        }
    }

    /// Closed-form covariance available (Gaussian family, b = 2, or OU).
    [[nodiscard]] bool closed_form() const {
        if (const auto* sp = std::get_if<SpectralPower>(&shape_)) return sp->b == 2;
        return true;
    }

private:
    void validate() const {
        std::visit(
            [](const auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, GaussianClosed>) {
                    if (!(s.a > 0)) fail(ErrorKind::InvalidArgument, "gaussian kernel needs a > 0");
                } else if constexpr (std::is_same_v<S, SpectralPower>) {
                    if (!(s.a > 0)) fail(ErrorKind::InvalidArgument, "spectral_power kernel needs a > 0");
                    if (!(s.c0 > 0)) fail(ErrorKind::InvalidArgument, "spectral_power kernel needs c0 > 0");
                    if (!(s.b > 1)) {
                        fail(ErrorKind::VariantUnsupported,
                             "spectral_power kernel needs b > 1 (S' must diverge), got b = " + s.b.to_decimal(8));
                    }
                } else {
                    if (!(s.theta > 0)) fail(ErrorKind::InvalidArgument, "ornstein_uhlenbeck kernel needs theta > 0");
                }
            },
            shape_);
    }

    Shape shape_;
    Real gamma_;
    Real g0_;
    bool unit_;
};

// ---------------------------------------------------------------------------
// Spectral-power view: Ghat(t) = c0 exp(-a |t|^b) with the scale folded into c0.

struct PowerLaw {
    Real a;
    Real b;
    Real c0;
};

/// Gaussian kernels map to b = 2; the OU density decays only polynomially.
inline PowerLaw as_power_law(const KernelSpec& kernel) {
    if (const auto* g = std::get_if<GaussianClosed>(&kernel.shape())) {
        const Real& v = kernel.variance();
        return {g->a, Real(2, v.precision()), v * sqrt(g->a / const_pi(v.precision()))};
    }
    if (const auto* s = std::get_if<SpectralPower>(&kernel.shape())) {
        return {s->a, s->b, s->c0 * kernel.gamma()};
    }
    fail(ErrorKind::VariantUnsupported, "kernel '" + std::string(kernel.name()) +
                                            "' has no representation Ghat = exp(-T(ln|t|)) with T' -> infinity");
}

inline Real spectral_density(const KernelSpec& kernel, const Real& t, const PrecisionContext& ctx) {
    (void)ctx;
    if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&kernel.shape())) {
        return kernel.variance() * ou->theta / (const_pi(t.precision()) * (sqr(ou->theta) + sqr(t)));
    }
    PowerLaw p = as_power_law(kernel);
    return p.c0 * exp(-(p.a * pow(abs(t), p.b)));
}

/// |t| beyond which c0 exp(-a |t|^b) drops below 10^-(target + guard) of G(0),
/// enlarged by `extra_log` nepers for integrands that amplify the density.
inline Real spectral_cutoff(const KernelSpec& kernel, int target_digits, double extra_log,
                            const PrecisionContext& ctx) {
    PowerLaw p = as_power_law(kernel);
    double nepers = 2.302585092994046 * (target_digits + ctx.guard_digits()) + extra_log + 5.0;
    double ratio_log = (log(p.c0) - log(kernel.variance())).to_double();
    if (ratio_log > 0) nepers += ratio_log;
    return pow(ctx.from_double(nepers) / p.a, 1 / p.b);
}

namespace detail {

inline void check_lag(const Real& x) {
    if (abs(x) > 2) fail(ErrorKind::InvalidArgument, "covariance lag must satisfy |x| <= 2, got " + x.to_decimal(8));
}

}  // namespace detail

/// Integral over R of w(t) Ghat(t) for an even weight w, truncated where Ghat
/// is negligible. `extra_log` bounds ln max|w|.
template <class W>
Real integrate_against_density(const KernelSpec& kernel, W&& weight, double extra_log, const PrecisionContext& ctx,
                               int target_digits) {
    PowerLaw p = as_power_law(kernel);
    const Real cutoff = spectral_cutoff(kernel, target_digits, extra_log, ctx);
    auto integrand = [&](const Real& t) { return weight(t) * (p.c0 * exp(-(p.a * pow(t, p.b)))); };
    if (p.b == 2) {
        // Entire integrand with Gaussian decay: the trapezoidal rule converges geometrically in 1/h^2.
        auto gaussian_integrand = [&](const Real& t) { return weight(t) * (p.c0 * exp(-(p.a * sqr(t)))); };
        return trapezoid_even_line(gaussian_integrand, cutoff, ctx, target_digits);
    }
    // |t|^b is not smooth at 0, so tanh-sinh (endpoint-robust) over short pieces.
    TanhSinh rule(ctx, target_digits);
    const long pieces = std::max(1L, static_cast<long>(std::ceil(cutoff.to_double() / 2.0)));
    return 2 * integrate_pieces(rule, integrand, ctx.zero(), cutoff, pieces);
}

/// G(x) by numerical Fourier inversion of the spectral density.
inline Real covariance_by_quadrature(const KernelSpec& kernel, const Real& x, const PrecisionContext& ctx,
                                     int target_digits) {
    detail::check_lag(x);
    if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&kernel.shape())) {
        TanhSinh rule(ctx, target_digits);
        return kernel.variance() * cauchy_cosine_transform(ou->theta, x, rule);
    }
    auto weight = [&](const Real& t) { return cos(x * t); };
    return integrate_against_density(kernel, weight, 0.0, ctx, target_digits);
}

inline Real covariance(const KernelSpec& kernel, const Real& x, const PrecisionContext& ctx) {
    detail::check_lag(x);
    return std::visit(
        [&](const auto& s) -> Real {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, GaussianClosed>) {
                return kernel.variance() * exp(-sqr(x) / (4 * s.a));
            } else if constexpr (std::is_same_v<S, SpectralPower>) {
                if (s.b == 2) return kernel.variance() * exp(-sqr(x) / (4 * s.a));
                if (x.is_zero()) return kernel.variance();
                return covariance_by_quadrature(kernel, x, ctx, ctx.digits());
            } else {
                return kernel.variance() * exp(-(s.theta * abs(x)));
            }
        },
        kernel.shape());
}

// ---------------------------------------------------------------------------
// Legendre machinery

/// S(t) = a t^b - ln c0.
inline Real big_s(const KernelSpec& kernel, const Real& t) {
    PowerLaw p = as_power_law(kernel);
    if (t < 0) fail(ErrorKind::InvalidArgument, "S is defined for t >= 0");
    return p.a * pow(t, p.b) - log(p.c0);
}

/// T(s) = a e^{bs} - ln c0, so that S(e^s) = T(s).
inline Real big_t(const KernelSpec& kernel, const Real& s) {
    PowerLaw p = as_power_law(kernel);
    return p.a * exp(p.b * s) - log(p.c0);
}

struct LegendreProfile {
    Real q;
    Real s_star;          // closed form (1/b) ln(q / (ab))
    Real t_star_value;    // closed form T*(q)
    Real numeric_s_star;  // golden-section maximizer of qs - T(s)
    Real numeric_t_star;
    std::optional<Real> f_value;          // F(K) when q = 2K + 1
    std::optional<Real> numeric_f_value;  // same from the numeric maximum
};

namespace detail {

/// Golden-section maximization of the concave function phi, independent of
/// any closed form. Returns (argmax, max).
template <class Phi>
std::pair<Real, Real> maximize_concave(Phi&& phi, const PrecisionContext& ctx) {
    Real step = ctx.from(1);
    Real mid = ctx.zero();
    Real f_mid = phi(mid);
    Real lo = mid - step;
    Real f_lo = phi(lo);
    Real hi = mid + step;
    Real f_hi = phi(hi);
    int expansions = 0;
    while (f_lo > f_mid || f_hi > f_mid) {
        if (++expansions > 400) fail(ErrorKind::MaximizationDiverged, "could not bracket the maximum");
        step *= 2;
        if (f_lo > f_mid) {
            hi = std::move(mid);
            f_hi = std::move(f_mid);
            mid = lo;
            f_mid = f_lo;
            lo = mid - step;
            f_lo = phi(lo);
        } else {
            lo = std::move(mid);
            f_lo = std::move(f_mid);
            mid = hi;
            f_mid = f_hi;
            hi = mid + step;
            f_hi = phi(hi);
        }
    }
    // Near the maximum phi is flat to second order, so the argmax is resolvable
    // only to about half the working digits.
    const Real width_tol = ctx.tolerance(static_cast<long>(0.45 * ctx.digits()));
    const Real inv_phi = (sqrt(ctx.from(5)) - 1) / 2;
    Real x1 = hi - inv_phi * (hi - lo);
    Real x2 = lo + inv_phi * (hi - lo);
    Real f1 = phi(x1);
    Real f2 = phi(x2);
    for (int iter = 0; iter < 20000; ++iter) {
        if (hi - lo <= width_tol * (1 + abs(mid))) {
            Real arg = (lo + hi) / 2;
            Real value = phi(arg);
            return {std::move(arg), std::move(value)};
        }
        if (f1 < f2) {
            lo = std::move(x1);
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = phi(x2);
        } else {
            hi = std::move(x2);
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = phi(x1);
        }
    }
    fail(ErrorKind::MaximizationDiverged, "golden-section search did not converge");
}

}  // namespace detail

/// T*(q) = max_s (qs - T(s)) in closed form, cross-checked against golden-section
/// maximization to 10^(-digits/2) of the size of the terms.
inline LegendreProfile legendre_star(const KernelSpec& kernel, const Real& q, const PrecisionContext& ctx) {
    PowerLaw p = as_power_law(kernel);
    if (!(q > 0)) fail(ErrorKind::InvalidArgument, "Legendre transform needs q > 0");
    const Real log_c0 = log(p.c0);
    Real s_star = log(q / (p.a * p.b)) / p.b;
    Real t_star = q / p.b * (log(q / (p.a * p.b)) - 1) + log_c0;

    auto phi = [&](const Real& s) { return q * s - (p.a * exp(p.b * s) - log_c0); };
    auto [num_s, num_t] = detail::maximize_concave(phi, ctx);

    const Real scale = abs(q * s_star) + abs(t_star) + 1;
    if (abs(num_t - t_star) > ctx.tolerance(ctx.digits() / 2) * scale) {
        fail(ErrorKind::MaximizationDiverged, "closed-form T* = " + t_star.to_decimal(20) +
                                                  " disagrees with numeric maximum " + num_t.to_decimal(20));
    }
    return {q, std::move(s_star), std::move(t_star), std::move(num_s), std::move(num_t), std::nullopt, std::nullopt};
}

inline LegendreProfile f_profile(const KernelSpec& kernel, long k, const PrecisionContext& ctx) {
    if (k < 2) fail(ErrorKind::InvalidArgument, "F(K) needs K >= 2");
    LegendreProfile prof = legendre_star(kernel, ctx.from(2 * k + 1), ctx);
    Real log_term = (2 * k + 1) * log(ctx.from(k));
    prof.f_value = prof.t_star_value - log_term;
    prof.numeric_f_value = prof.numeric_t_star - log_term;
    return prof;
}

/// F(K) = T*(2K+1) - (2K+1) ln K.
inline Real f_of_k(const KernelSpec& kernel, long k, const PrecisionContext& ctx) {
    return *f_profile(kernel, k, ctx).f_value;
}

/// (2K+1)/b (ln((2K+1)/(ab)) - b ln K - 1) + ln c0, without any maximization.
inline Real f_of_k_closed_form(const KernelSpec& kernel, long k, const PrecisionContext& ctx) {
    PowerLaw p = as_power_law(kernel);
    Real q = ctx.from(2 * k + 1);
    return q / p.b * (log(q / (p.a * p.b)) - p.b * log(ctx.from(k)) - 1) + log(p.c0);
}

}  // namespace eilab
