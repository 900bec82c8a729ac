#pragma once

// Numerical checks of the approximation-theoretic statements about EI under
// spectrally fast-decaying kernels. Every inequality involving F(K) is checked on
// logarithms: quantities like exp(2^K F(K)) leave any exponent range quickly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eilab/error.hpp"
#include "eilab/expected_improvement.hpp"
#include "eilab/kernel.hpp"
#include "eilab/linalg.hpp"
#include "eilab/posterior.hpp"
#include "eilab/real.hpp"

namespace eilab {

struct BoundReport {
    std::string label;
    long k = 0;
    Real lhs;
    Real rhs;
    Real ratio;  // lhs / rhs, or lhs - rhs for log-domain labels
    bool satisfied = false;
    std::vector<std::pair<std::string, std::string>> context;
};

/// Report for lhs <= rhs, allowing relative slack 10^(-digits/4).
inline BoundReport check_le(std::string label, long k, const Real& lhs, const Real& rhs, const PrecisionContext& ctx,
                            bool log_domain = false) {
    const Real slack = ctx.tolerance(ctx.digits() / 4) * max(abs(lhs), abs(rhs));
    BoundReport r{std::move(label), k, lhs, rhs, ctx.zero(), lhs <= rhs + slack, {}};
    if (log_domain) {
        r.ratio = lhs - rhs;
    } else if (!rhs.is_zero()) {
        r.ratio = lhs / rhs;
    }
    return r;
}

inline bool all_satisfied(std::span<const BoundReport> reports) {
    return std::all_of(reports.begin(), reports.end(), [](const BoundReport& r) { return r.satisfied; });
}

// ---------------------------------------------------------------------------
// Lagrange weights and the approximation error behind the NEB violation

struct LagrangeWeights {
    Real target;
    std::vector<Real> nodes;
    std::vector<Real> weights;
};

/// lambda_k = prod_{l != k} (x - x_l) / (x_k - x_l). Polynomial reproduction of
/// x^j, j < K, is verified before returning.
inline LagrangeWeights lagrange_weights(const Real& x, std::span<const Real> nodes, const PrecisionContext& ctx) {
    const std::size_t n = nodes.size();
    if (n == 0) fail(ErrorKind::InvalidArgument, "need at least one node");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (nodes[i] == nodes[j]) fail(ErrorKind::DuplicateNodes, "node " + nodes[i].to_decimal(20) + " repeats");
        }
    }
    std::vector<Real> w;
    w.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        Real v = ctx.from(1);
        for (std::size_t l = 0; l < n; ++l) {
            if (l != k) v *= (x - nodes[l]) / (nodes[k] - nodes[l]);
        }
        w.push_back(std::move(v));
    }
    const Real tol = ctx.tolerance(ctx.digits() / 2);
    for (std::size_t j = 0; j < n; ++j) {
        Real sum = ctx.zero();
        Real scale = ctx.zero();
        for (std::size_t k = 0; k < n; ++k) {
            Real term = w[k] * pow(nodes[k], static_cast<long>(j));
            scale += abs(term);
            sum += term;
        }
        const Real target = pow(x, static_cast<long>(j));
        if (abs(sum - target) > tol * (scale + abs(target))) {
            fail(ErrorKind::InvalidArgument, "Lagrange weights lose monomial x^" + std::to_string(j) +
                                                 " at this precision");
        }
    }
    return {x, std::vector<Real>(nodes.begin(), nodes.end()), std::move(w)};
}

struct ApproxError {
    Real value;
    bool clamped = false;
};

/// ||phi_x - sum lambda_k phi_{x_k}||^2 in L^2(Ghat), clamped at 0.
inline ApproxError rkhs_approx_error(const KernelSpec& kernel, const Real& x, std::span<const Real> nodes,
                                     std::span<const Real> weights, const PrecisionContext& ctx) {
    Real v = variance_quadratic_form(kernel, x, nodes, weights, ctx);
    if (v < 0) return {ctx.zero(), true};
    return {std::move(v), false};
}

struct DecayPoint {
    long k;
    Real error_sq;
    Real posterior_variance;
};

struct DecayScan {
    std::vector<DecayPoint> points;
    double slope = 0;  // least-squares slope of ln error^2 against K over the fit range
    long fit_from = 0;
    long fit_to = 0;
};

/// Equispaced nodes in [lo, hi] (K = 1 gives the midpoint).
inline std::vector<Real> equispaced(const Real& lo, const Real& hi, long k) {
    std::vector<Real> out;
    if (k == 1) {
        out.push_back((lo + hi) / 2);
        return out;
    }
    for (long i = 0; i < k; ++i) out.push_back((lo * (k - 1 - i) + hi * i) / (k - 1));
    return out;
}

/// Least-squares slope of ys against xs.
inline double fit_slope(std::span<const double> xs, std::span<const double> ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Approximation error of e^{ixt} by Lagrange combinations of nodes in [lo, hi]
/// for K = k_min..k_max, together with the conditional variance of the same design.
inline DecayScan neb_decay_scan(const KernelSpec& kernel, const Real& x, const Real& lo, const Real& hi, long k_min,
                                long k_max, long fit_from, long fit_to, const PrecisionContext& ctx) {
    DecayScan scan;
    scan.fit_from = fit_from;
    scan.fit_to = fit_to;
    std::vector<double> ks, logs;
    for (long k = k_min; k <= k_max; ++k) {
        std::vector<Real> nodes = equispaced(lo, hi, k);
        LagrangeWeights lw = lagrange_weights(x, nodes, ctx);
        ApproxError err = rkhs_approx_error(kernel, x, nodes, lw.weights, ctx);
        TrajectoryState design(kernel, ctx, nodes[0], ctx.zero());
        for (std::size_t i = 1; i < nodes.size(); ++i) design = design.add_point(nodes[i], ctx.zero());
        Real var = posterior(design, x).variance;
        if (k >= fit_from && k <= fit_to) {
            ks.push_back(static_cast<double>(k));
            logs.push_back(err.value.log_abs());
        }
        scan.points.push_back({k, std::move(err.value), std::move(var)});
    }
    scan.slope = ks.size() >= 2 ? fit_slope(ks, logs) : 0.0;
    return scan;
}

// ---------------------------------------------------------------------------
// Vandermonde distance

/// Coefficients e_0..e_K of prod (1 + z_k y).
inline std::vector<Complex> elementary_symmetric(std::span<const Complex> zs, const PrecisionContext& ctx) {
    std::vector<Complex> e(zs.size() + 1, Complex(ctx.bits()));
    e[0] = Complex(ctx.from(1), ctx.zero());
    for (std::size_t k = 0; k < zs.size(); ++k) {
        for (std::size_t q = k + 1; q >= 1; --q) e[q] = e[q] + e[q - 1] * zs[k];
    }
    return e;
}

namespace detail {

inline void check_distinct(const Complex& z, std::span<const Complex> zs) {
    for (std::size_t i = 0; i < zs.size(); ++i) {
        if ((z - zs[i]).is_zero()) fail(ErrorKind::DuplicatePoints, "z coincides with z_" + std::to_string(i + 1));
        for (std::size_t j = 0; j < i; ++j) {
            if ((zs[i] - zs[j]).is_zero()) {
                fail(ErrorKind::DuplicatePoints,
                     "z_" + std::to_string(i + 1) + " coincides with z_" + std::to_string(j + 1));
            }
        }
    }
}

}  // namespace detail

/// rho = prod |z - z_k| / sqrt(1 + sum_{q>=1} |e_q(z_1..z_K)|^2).
inline Real vandermonde_distance(const Complex& z, std::span<const Complex> zs, const PrecisionContext& ctx) {
    detail::check_distinct(z, zs);
    Real num = ctx.from(1);
    for (const Complex& zk : zs) num *= (z - zk).abs();
    std::vector<Complex> e = elementary_symmetric(zs, ctx);
    Real den = ctx.zero();
    for (const Complex& c : e) den += c.norm();
    return num / sqrt(den);
}

/// The same distance as sqrt(g(v, v_1..v_K) / g(v_1..v_K)) with v = (1, z, .., z^K).
inline Real gram_distance_oracle(const Complex& z, std::span<const Complex> zs, const PrecisionContext& ctx) {
    if (zs.size() > 10) fail(ErrorKind::InvalidArgument, "Gram oracle supports at most 10 points");
    detail::check_distinct(z, zs);
    const std::size_t dim = zs.size() + 1;
    auto row = [&](const Complex& w) {
        std::vector<Complex> v;
        v.reserve(dim);
        Complex p(ctx.from(1), ctx.zero());
        for (std::size_t i = 0; i < dim; ++i) {
            v.push_back(p);
            p = p * w;
        }
        return v;
    };
    std::vector<std::vector<Complex>> basis;
    for (const Complex& zk : zs) basis.push_back(row(zk));
    const Real g_base = gram_det(basis, ctx);
    basis.insert(basis.begin(), row(z));
    const Real g_full = gram_det(basis, ctx);
    return sqrt(g_full / g_base);
}

// ---------------------------------------------------------------------------
// Conditional-variance sandwich

struct SandwichCheck {
    BoundReport lower;  // -K <= L
    BoundReport upper;  // L <= 2K
    Real log_ratio;     // L = ln sigma^2 - F(K) - sum ln |x - x_k|^2
    bool variance_clamped = false;
};

/// Checks e^{-K} <= sigma^2 / (e^{F(K)} prod |x - x_k|^2) <= e^{2K} on logarithms.
/// Pass `f_value` to reuse a precomputed F(K).
inline SandwichCheck theorem2_ratio_check(const KernelSpec& kernel, const Real& x, std::span<const Real> nodes,
                                          const PrecisionContext& ctx, const std::optional<Real>& f_value = {}) {
    const long k = static_cast<long>(nodes.size());
    if (k < 2) fail(ErrorKind::InvalidArgument, "the sandwich bound needs K >= 2");
    TrajectoryState design(kernel, ctx, nodes[0], ctx.zero());
    for (long i = 1; i < k; ++i) design = design.add_point(nodes[static_cast<std::size_t>(i)], ctx.zero());
    if (design.find(x) >= 0) fail(ErrorKind::DuplicatePoints, "query coincides with a node");
    PosteriorMoments mom = PosteriorModel(design).at(x);
    const Real f = f_value ? *f_value : f_of_k(kernel, k, ctx);
    Real log_prod = ctx.zero();
    for (const Real& xk : nodes) log_prod += 2 * log(abs(x - xk));
    // A clamped variance carries no digits; log(0) = -inf makes the lower bound fail visibly.
    Real log_var = log(mom.variance);
    Real l = log_var - f - log_prod;
    SandwichCheck out{check_le("thm2-lower", k, ctx.from(-k), l, ctx, true),
                      check_le("thm2-upper", k, l, ctx.from(2 * k), ctx, true), l, mom.clamped};
    for (BoundReport* r : {&out.lower, &out.upper}) {
        r->context.emplace_back("x", x.to_decimal(20));
        r->context.emplace_back("log_variance", log_var.to_decimal(20));
        r->context.emplace_back("F", f.to_decimal(20));
    }
    return out;
}

struct SandwichSweep {
    long k_min = 2;
    long k_max = 25;
    long configs = 20;
    std::vector<SandwichCheck> checks;  // ordered by K, then configuration
    std::vector<long> failures_per_k;   // index K - k_min
    std::optional<long> k0;             // first K where every configuration passes
    bool holds_beyond_k0 = false;       // every K >= k0 passes too
};

/// Random configurations: x and K nodes drawn uniformly from [-1, 1], kept at least
/// 10^-3 apart so the design stays resolvable at the working precision.
inline SandwichSweep theorem2_sweep(const KernelSpec& kernel, long k_min, long k_max, long configs, unsigned long seed,
                                    const PrecisionContext& ctx) {
    SandwichSweep sweep;
    sweep.k_min = k_min;
    sweep.k_max = k_max;
    sweep.configs = configs;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (long k = k_min; k <= k_max; ++k) {
        const Real f = f_of_k(kernel, k, ctx);
        long failures = 0;
        for (long c = 0; c < configs; ++c) {
            std::vector<double> pts;
            while (static_cast<long>(pts.size()) < k + 1) {
                double cand = std::round(u(rng) * 1e6) / 1e6;
                bool ok = std::all_of(pts.begin(), pts.end(), [&](double p) { return std::fabs(p - cand) >= 1e-3; });
                if (ok) pts.push_back(cand);
            }
            const Real x = ctx.from_double(pts[0]);
            std::vector<Real> nodes;
            for (std::size_t i = 1; i < pts.size(); ++i) nodes.push_back(ctx.from_double(pts[i]));
            SandwichCheck chk = theorem2_ratio_check(kernel, x, nodes, ctx, f);
            if (!chk.lower.satisfied || !chk.upper.satisfied) ++failures;
            sweep.checks.push_back(std::move(chk));
        }
        sweep.failures_per_k.push_back(failures);
    }
    for (long k = k_min; k <= k_max; ++k) {
        if (sweep.failures_per_k[static_cast<std::size_t>(k - k_min)] == 0) {
            sweep.k0 = k;
            break;
        }
    }
    if (sweep.k0) {
        sweep.holds_beyond_k0 = true;
        for (long k = *sweep.k0; k <= k_max; ++k) {
            if (sweep.failures_per_k[static_cast<std::size_t>(k - k_min)] != 0) sweep.holds_beyond_k0 = false;
        }
    }
    return sweep;
}

// ---------------------------------------------------------------------------
// Trajectory envelope

/// For each K in [k_min, k_max] with x_{K+1} available, reports
/// 2^K F(K) <= ln|x_{K+1}| ("thm3-lower") and ln|x_{K+1}| <= F(K)/3 ("thm3-upper").
inline std::vector<BoundReport> theorem3_bounds_check(std::span<const Real> trajectory, const KernelSpec& kernel,
                                                      long k_min, long k_max, const PrecisionContext& ctx) {
    std::vector<BoundReport> out;
    k_min = std::max(k_min, 2L);
    for (long k = k_min; k <= k_max && k < static_cast<long>(trajectory.size()); ++k) {
        const Real& next = trajectory[static_cast<std::size_t>(k)];  // x_{K+1}
        const Real log_next = log(abs(next));
        const Real f = f_of_k(kernel, k, ctx);
        const Real lower = ldexp(f, k);  // 2^K F(K), never exponentiated
        const Real upper = f / 3;
        BoundReport lo = check_le("thm3-lower", k, lower, log_next, ctx, true);
        BoundReport hi = check_le("thm3-upper", k, log_next, upper, ctx, true);
        for (BoundReport* r : {&lo, &hi}) {
            r->context.emplace_back("x_next", next.to_decimal(20));
            r->context.emplace_back("F", f.to_decimal(20));
        }
        out.push_back(std::move(lo));
        out.push_back(std::move(hi));
    }
    return out;
}

/// Smallest K such that |x_{j+1}| < |x_j|^2 for every j >= K along the trajectory.
inline std::optional<long> collapse_threshold(std::span<const Real> trajectory) {
    std::optional<long> k0;
    const long n = static_cast<long>(trajectory.size());
    for (long k = n - 1; k >= 2; --k) {
        const auto i = static_cast<std::size_t>(k);
        if (!(abs(trajectory[i]) < sqr(trajectory[i - 1]))) break;
        k0 = k;
    }
    return k0;
}

// ---------------------------------------------------------------------------
// Tail integral bounds

struct TailCheck {
    Real h;
    Real closed_form;
    Real quadrature;
    BoundReport lower;   // e^{-h^2} / 2 <= I(h)
    BoundReport upper;   // I(h) <= e^{-h^2/2}
    BoundReport oracle;  // |closed - quadrature| <= 10^(-digits/4) |closed|
};

inline std::vector<TailCheck> lemma3_tail_check(std::span<const Real> hs, const PrecisionContext& ctx) {
    std::vector<TailCheck> out;
    long idx = 0;
    for (const Real& h : hs) {
        if (h < 0) fail(ErrorKind::InvalidArgument, "tail bounds are stated for h >= 0");
        Real closed = tail_integral_closed_form(h, ctx);
        Real quad = tail_integral_quadrature(h, ctx);
        // Compared on logarithms so that large h stays meaningful at any exponent range.
        const Real log_i = log(closed);
        const Real log_lower = -sqr(h) - log(ctx.from(2));
        const Real log_upper = -sqr(h) / 2;
        TailCheck t{h,
                    closed,
                    quad,
                    check_le("lemma3-lower", idx, log_lower, log_i, ctx, true),
                    check_le("lemma3-upper", idx, log_i, log_upper, ctx, true),
                    check_le("lemma3-oracle", idx, abs(closed - quad), ctx.tolerance(ctx.digits() / 4) * abs(closed),
                             ctx)};
        for (BoundReport* r : {&t.lower, &t.upper, &t.oracle}) r->context.emplace_back("h", h.to_decimal(20));
        out.push_back(std::move(t));
        ++idx;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Coverage

/// Largest gap between consecutive sorted points; the domain ends are not counted.
inline Real max_gap(std::span<const Real> points, const PrecisionContext& ctx) {
    std::vector<Real> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end(), [](const Real& a, const Real& b) { return a < b; });
    Real gap = ctx.zero();
    for (std::size_t i = 1; i < sorted.size(); ++i) gap = max(gap, sorted[i] - sorted[i - 1]);
    return gap;
}

/// max_gap of x_1..x_K for K = 1..n.
inline std::vector<Real> coverage_by_k(std::span<const Real> trajectory, const PrecisionContext& ctx) {
    std::vector<Real> out;
    for (std::size_t k = 1; k <= trajectory.size(); ++k) out.push_back(max_gap(trajectory.first(k), ctx));
    return out;
}

}  // namespace eilab
