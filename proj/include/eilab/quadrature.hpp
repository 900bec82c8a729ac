#pragma once

// High-precision quadrature: tanh-sinh (double exponential) on finite
// intervals, the trapezoidal rule on the real line for entire integrands with
// super-exponential decay, and a cosine transform of the Cauchy density used by
// the Ornstein-Uhlenbeck kernel.
//
// Convergence test shared by all rules: refinement stops once two successive
// levels differ by at most 10^(-target/2) of the absolute integral. Both rules
// square (or better) their error per level, so the returned value is then good
// to roughly 10^(-target) of that scale.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "eilab/error.hpp"
#include "eilab/real.hpp"

namespace eilab {

struct QuadratureStats {
    int level = 0;
    std::size_t evaluations = 0;
};

/// Tanh-sinh rule with abscissas cached per level on the reference interval.
/// Instances are cheap to create and are not meant to be shared across threads.
class TanhSinh {
public:
    TanhSinh(const PrecisionContext& ctx, int target_digits, int max_level = 11)
        : ctx_(ctx), target_digits_(target_digits), max_level_(max_level),
          tol_(ctx.tolerance(target_digits / 2)) {
        // Weights decay like exp(-pi e^|t|); stop where they fall below 10^-(target+10).
        t_max_ = std::asinh(2.302585092994046 * (target_digits + 10) / 3.14159265358979);
    }

    template <class F>
    Real integrate(F&& f, const Real& a, const Real& b, QuadratureStats* stats = nullptr) const {
        if (a == b) return ctx_.zero();
        if (b < a) return -integrate(f, b, a, stats);
        const Real half = (b - a) / 2;
        const Real mid = a + half;

        Real sum = f(mid) * half;  // t = 0 node; its reference weight is pi/2, applied below
        sum *= ctx_.pi();
        sum /= 2;
        Real l1 = abs(sum);
        std::size_t evals = 1;

        Real previous(ctx_.bits());
        Real estimate(ctx_.bits());
        for (int level = 0; level <= max_level_; ++level) {
            const auto& nodes = level_nodes(level);
            Real level_sum = ctx_.zero();
            Real level_l1 = ctx_.zero();
            for (const Node& n : nodes) {
                Real dx = half * n.offset;
                Real w = half * n.weight;
                Real fr = f(b - dx);
                Real fl = f(a + dx);
                level_sum += w * (fr + fl);
                level_l1 += w * (abs(fr) + abs(fl));
            }
            evals += 2 * nodes.size();
            sum += level_sum;
            l1 += level_l1;
            // Level l uses step h = 2^-l; the accumulated sum is scaled once here.
            estimate = ldexp(sum, -level);
            Real scale = ldexp(l1, -level);
            if (level >= 3 && abs(estimate - previous) <= tol_ * scale) {
                if (stats) *stats = {level, evals};
                return estimate;
            }
            previous = estimate;
        }
        fail(ErrorKind::QuadratureNotConverged,
             "tanh-sinh did not reach " + std::to_string(target_digits_) + " digits by level " +
                 std::to_string(max_level_));
    }

    [[nodiscard]] const PrecisionContext& context() const { return ctx_; }
    [[nodiscard]] int target_digits() const { return target_digits_; }

private:
    struct Node {
        Real offset;  // distance from the nearer endpoint on [-1, 1]
        Real weight;
    };

    // Level 0 holds t = 1, 2, ...; level l > 0 holds the odd multiples of 2^-l.
    const std::vector<Node>& level_nodes(int level) const {
        while (static_cast<int>(levels_.size()) <= level) {
            const int l = static_cast<int>(levels_.size());
            const long denom = 1L << l;
            const long count = static_cast<long>(std::ceil(t_max_ * static_cast<double>(denom)));
            std::vector<Node> nodes;
            const Real half_pi = ctx_.pi() / 2;
            for (long k = 1; k <= count; k += (l == 0 ? 1 : 2)) {
                Real t = ctx_.from(k) / denom;
                Real u = half_pi * sinh(t);
                Real cu = cosh(u);
                Real weight = half_pi * cosh(t) / sqr(cu);
                Real offset = 2 / (exp(2 * u) + 1);
                nodes.push_back({std::move(offset), std::move(weight)});
            }
            levels_.push_back(std::move(nodes));
        }
        return levels_[static_cast<std::size_t>(level)];
    }

    PrecisionContext ctx_;
    int target_digits_;
    int max_level_;
    Real tol_;
    double t_max_;
    mutable std::vector<std::vector<Node>> levels_;
};

/// Sum of tanh-sinh integrals over `pieces` equal subintervals of [a, b].
template <class F>
Real integrate_pieces(const TanhSinh& rule, F&& f, const Real& a, const Real& b, long pieces) {
    if (pieces < 1) pieces = 1;
    const Real width = (b - a) / pieces;
    Real total = rule.context().zero();
    Real lo = a;
    for (long i = 1; i <= pieces; ++i) {
        Real hi = (i == pieces) ? b : a + width * i;
        total += rule.integrate(f, lo, hi);
        lo = std::move(hi);
    }
    return total;
}

/// Integral over the real line of an even, entire integrand f truncated at
/// |t| <= t_max, by the trapezoidal rule with successive step halving.
template <class F>
Real trapezoid_even_line(F&& f, const Real& t_max, const PrecisionContext& ctx, int target_digits,
                         int max_halvings = 12) {
    const Real tol = ctx.tolerance(target_digits / 2);
    Real h = ctx.from(1);
    Real sum_interior = ctx.zero();  // sum over k >= 1 of f(k h)
    Real l1_interior = ctx.zero();
    const Real f0 = f(ctx.zero());
    for (Real t = h; t <= t_max; t += h) {
        Real v = f(t);
        l1_interior += abs(v);
        sum_interior += v;
    }
    Real previous = h * (f0 + 2 * sum_interior);
    for (int halving = 1; halving <= max_halvings; ++halving) {
        Real step = ldexp(h, -halving);
        Real odd_sum = ctx.zero();
        for (Real t = step; t <= t_max; t += 2 * step) {
            Real v = f(t);
            l1_interior += abs(v);
            odd_sum += v;
        }
        sum_interior += odd_sum;
        Real estimate = step * (f0 + 2 * sum_interior);
        Real scale = step * (abs(f0) + 2 * l1_interior);
        if (halving >= 2 && abs(estimate - previous) <= tol * scale) return estimate;
        previous = std::move(estimate);
    }
    fail(ErrorKind::QuadratureNotConverged, "trapezoid rule did not converge");
}

/// Integral over R of cos(omega t) * theta / (pi (theta^2 + t^2)).
///
/// omega = 0 uses the substitution t = theta s / (1 - s). Otherwise the
/// integral splits at t = A into half-period tanh-sinh pieces on [0, A] and an
/// integration-by-parts expansion of the tail, whose terms are formed from the
/// partial fractions of 1 / (theta^2 + t^2). A is chosen so that omega A exceeds
/// the requested number of nepers, which bounds the smallest tail term.
inline Real cauchy_cosine_transform(const Real& theta, const Real& omega_in, const TanhSinh& rule) {
    const PrecisionContext& ctx = rule.context();
    const Real omega = abs(omega_in);
    const Real pi = ctx.pi();
    if (omega.is_zero()) {
        auto mapped = [&](const Real& s) { return 1 / (sqr(1 - s) + sqr(s)); };
        return 2 * rule.integrate(mapped, ctx.zero(), ctx.from(1)) / pi;
    }

    const double nepers = 2.302585092994046 * (rule.target_digits() + 5) + 10.0;
    const long half_periods = static_cast<long>(std::ceil(nepers / 3.14159265358979)) + 1;
    const Real a_cut = pi * half_periods / omega;
    const Real theta_sq = sqr(theta);
    auto finite_integrand = [&](const Real& t) { return cos(omega * t) / (theta_sq + sqr(t)); };
    Real finite = integrate_pieces(rule, finite_integrand, ctx.zero(), a_cut, half_periods);

    // tail = Re( -e^{i omega A} sum_k k!/(2 i theta) (p^{k+1} - m^{k+1}) ),
    // p = 1/(i omega (A - i theta)), m = 1/(i omega (A + i theta)).
    const Complex i_omega(ctx.zero(), omega);
    const Complex p = Complex(ctx.from(1), ctx.zero()) / (i_omega * Complex(a_cut, -theta));
    const Complex m = Complex(ctx.from(1), ctx.zero()) / (i_omega * Complex(a_cut, theta));
    Complex p_pow = p;
    Complex m_pow = m;
    Real factorial = ctx.from(1);
    Complex series(ctx.bits());
    const Real tail_tol = ctx.tolerance(rule.target_digits() + 2);
    bool converged = false;
    for (long k = 0; k < 4 * half_periods + 64; ++k) {
        if (k > 0) factorial *= k;
        Complex term = (p_pow - m_pow) * factorial;
        series = series + term;
        if (term.abs() <= tail_tol * (series.abs() + abs(finite))) {
            converged = true;
            break;
        }
        p_pow = p_pow * p;
        m_pow = m_pow * m;
    }
    if (!converged) fail(ErrorKind::QuadratureNotConverged, "oscillatory tail expansion did not converge");
    // divide by 2 i theta, multiply by -e^{i omega A}
    const Complex two_i_theta(ctx.zero(), 2 * theta);
    const Complex phase = Complex::polar_unit(omega * a_cut);
    const Complex tail = -(phase * (series / two_i_theta));
    return 2 * theta * (finite + tail.re) / pi;
}

}  // namespace eilab
