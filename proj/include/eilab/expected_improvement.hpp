#pragma once

// Expected improvement for minimization,
//
//     I(x) = E[max(f* - xi_x, 0)] = sigma (psi(h) - h Psi(-h)),   h = (m - f*) / sigma,
//
// with psi and Psi the standard normal density and distribution function, its
// arg-max over the log-scale grid {+-e^{-l eps}}, and the optimization loop.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eilab/error.hpp"
#include "eilab/kernel.hpp"
#include "eilab/posterior.hpp"
#include "eilab/quadrature.hpp"
#include "eilab/real.hpp"

namespace eilab {

struct CandidateGrid {
    Real epsilon;
    long l_max = 10000;
    std::vector<Real> extra_points;

    static CandidateGrid standard(const PrecisionContext& ctx) { return {ctx.parse("0.02"), 10000, {}}; }

    /// {+e^{-l eps}, -e^{-l eps} : l = 0..l_max} together with the extra points,
    /// sorted ascending and deduplicated.
    [[nodiscard]] std::vector<Real> generate(const PrecisionContext& ctx) const {
        if (!(epsilon > 0)) fail(ErrorKind::InvalidArgument, "grid epsilon must be positive");
        if (l_max < 0) fail(ErrorKind::InvalidArgument, "grid l_max must be non-negative");
        std::vector<Real> pts;
        pts.reserve(static_cast<std::size_t>(2 * (l_max + 1)) + extra_points.size());
        for (long l = 0; l <= l_max; ++l) {
            Real v = exp(-(epsilon * l)).rounded(ctx.bits());
            pts.push_back(-v);
            pts.push_back(std::move(v));
        }
        for (const Real& e : extra_points) {
            if (abs(e) > 1) fail(ErrorKind::InvalidArgument, "extra grid point outside [-1, 1]: " + e.to_decimal(20));
            pts.push_back(e.rounded(ctx.bits()));
        }
        std::sort(pts.begin(), pts.end(), [](const Real& a, const Real& b) { return a < b; });
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        return pts;
    }
};

struct EIEvaluation {
    Real point;
    Real ei;
    PosteriorMoments moments;
};

namespace detail {

inline double log_sqrt_2pi() { return 0.91893853320467274178; }

/// Bits of cancellation in psi(h) - h Psi(-h) for large positive h.
inline long ei_extra_bits(const Real& h) {
    double lh = h.log_abs();
    long extra = 32;
    if (lh > 0) extra += static_cast<long>(std::ceil(2.0 * lh / 0.6931471805599453));
    return extra;
}

}  // namespace detail

/// Closed-form EI from posterior moments; sigma = 0 gives max(f* - m, 0).
inline Real ei_from_moments(const Real& mean, const Real& variance, const Real& best, const PrecisionContext& ctx) {
    if (variance.is_zero()) {
        Real gain = best - mean;
        return gain > 0 ? gain : ctx.zero();
    }
    const Real sigma = sqrt(variance);
    const Real h0 = (mean - best) / sigma;
    const mpfr_prec_t bits = ctx.bits() + detail::ei_extra_bits(h0);
    const Real s = sqrt(variance.rounded(bits));
    const Real h = (mean.rounded(bits) - best.rounded(bits)) / s;
    const Real pi = const_pi(bits);
    const Real density = exp(-sqr(h) / 2) / sqrt(2 * pi);
    const Real upper_tail = erfc(h / sqrt(Real(2, bits))) / 2;  // Psi(-h)
    Real value = s * (density - h * upper_tail);
    if (value < 0) value = Real(bits);  // rounding residue at the bottom of the exponent range
    return value.rounded(ctx.bits());
}

inline EIEvaluation expected_improvement(const PosteriorModel& model, const Real& x) {
    const TrajectoryState& state = model.state();
    PosteriorMoments mom = model.at(x);
    Real ei = ei_from_moments(mom.mean, mom.variance, state.best(), state.context());
    return {x, std::move(ei), std::move(mom)};
}

inline EIEvaluation expected_improvement(const TrajectoryState& state, const Real& x) {
    if (abs(x) > 1) fail(ErrorKind::InvalidArgument, "query must lie in [-1, 1]");
    if (state.find(x) >= 0) {
        PosteriorMoments mom = posterior(state, x);
        return {x, state.context().zero(), std::move(mom)};
    }
    return expected_improvement(PosteriorModel(state), x);
}

/// (sigma / sqrt(2 pi)) * integral_0^infinity w exp(-(w + h)^2 / 2) dw by quadrature,
/// truncated where the integrand drops below 10^-(digits + guard) of its peak.
inline Real ei_integral_oracle(const Real& mean, const Real& variance, const Real& best, const PrecisionContext& ctx) {
    if (!(variance > 0)) fail(ErrorKind::InvalidArgument, "integral representation needs sigma > 0");
    const Real sigma = sqrt(variance);
    const Real h = (mean - best) / sigma;
    const int target = ctx.digits() / 2;
    TanhSinh rule(ctx, target);
    const Real span = sqrt(ctx.from_double(2 * ctx.negligible_log()));
    auto integrand = [&](const Real& w) { return w * exp(-sqr(w + h) / 2); };
    Real integral(ctx.bits());
    if (h >= 0) {
        const Real upper = sqrt(sqr(h) + sqr(span)) - h;
        // The integrand decays on the scale 1/h near 0; split off that layer.
        const Real knee = min(upper, 1 / max(h, ctx.from(1)) * 8);
        integral = rule.integrate(integrand, ctx.zero(), knee) + rule.integrate(integrand, knee, upper);
    } else {
        const Real peak = -h;
        integral = rule.integrate(integrand, ctx.zero(), peak) + rule.integrate(integrand, peak, peak + span);
    }
    return sigma * integral / sqrt(2 * ctx.pi());
}

inline Real ei_integral_oracle(const TrajectoryState& state, const Real& x, const PrecisionContext& ctx) {
    PosteriorMoments mom = posterior(state, x);
    return ei_integral_oracle(mom.mean, mom.variance, state.best(), ctx);
}

/// integral_0^infinity e^{-(w+h)^2/2} w dw = e^{-h^2/2} - h sqrt(pi/2) erfc(h / sqrt 2).
inline Real tail_integral_closed_form(const Real& h, const PrecisionContext& ctx) {
    const mpfr_prec_t bits = ctx.bits() + detail::ei_extra_bits(h);
    const Real hh = h.rounded(bits);
    const Real pi = const_pi(bits);
    Real v = exp(-sqr(hh) / 2) - hh * sqrt(pi / 2) * erfc(hh / sqrt(Real(2, bits)));
    return v.rounded(ctx.bits());
}

inline Real tail_integral_quadrature(const Real& h, const PrecisionContext& ctx) {
    return ei_integral_oracle(h, ctx.from(1), ctx.zero(), ctx) * sqrt(2 * ctx.pi());
}

// ---------------------------------------------------------------------------
// Arg-max over a candidate set

namespace detail {

/// Bracket [lo, hi] for ln E(h), E(h) = psi(h) - h Psi(-h), in double precision.
inline std::pair<double, double> log_ei_factor_bounds(double h) {
    if (std::isnan(h)) return {-HUGE_VAL, HUGE_VAL};
    if (h > 3.0) {
        // Mills-ratio bounds: psi(h)/(h^2+3) <= E(h) <= psi(h)/(h^2+1).
        if (std::isinf(h)) return {-HUGE_VAL, -HUGE_VAL};
        const double lpsi = -0.5 * h * h - log_sqrt_2pi();
        return {lpsi - std::log(h * h + 3.0), lpsi - std::log(h * h + 1.0)};
    }
    if (h < -30.0) {
        // E(h) = E(-h) - h with 0 < E(-h) < 1.
        if (std::isinf(h)) return {HUGE_VAL, HUGE_VAL};
        return {std::log(-h), std::log(-h + 1.0)};
    }
    const double e = std::exp(-0.5 * h * h - log_sqrt_2pi()) - h * 0.5 * std::erfc(h / std::sqrt(2.0));
    const double le = std::log(e);
    const double slack = 1e-9 * (1.0 + std::fabs(le));
    return {le - slack, le + slack};
}

}  // namespace detail

struct ScoredCandidate {
    std::size_t index;
    double log_lo;
    double log_hi;
};

/// Scores candidates, returning the maximizer of EI. Ties (within relative
/// 10^(-digits/2) of the maximum) go to the smallest |x|, then to the negative
/// point, so the result does not depend on the order candidates are visited.
///
/// `moments_of(i)` must return the posterior moments at candidate i. Exact EI is
/// evaluated only for candidates whose double-precision upper bound on ln EI
/// reaches the best lower bound; the rest provably cannot win.
template <class MomentsOf>
EIEvaluation argmax_over(std::span<const Real> candidates, MomentsOf&& moments_of, const Real& best,
                         const PrecisionContext& ctx, std::size_t* exact_evaluations = nullptr) {
    if (candidates.empty()) fail(ErrorKind::EmptyGrid, "no candidates left after removing design points");
    std::vector<PosteriorMoments> moments;
    moments.reserve(candidates.size());
    std::vector<ScoredCandidate> scored;
    scored.reserve(candidates.size());
    double best_lo = -HUGE_VAL;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        moments.push_back(moments_of(i));
        const PosteriorMoments& m = moments.back();
        double lo = -HUGE_VAL;
        double hi = -HUGE_VAL;
        if (m.variance.is_zero()) {
            Real gain = best - m.mean;
            if (gain > 0) lo = hi = gain.log_abs();
        } else {
            const double log_sigma = 0.5 * m.variance.log_abs();
            const Real h = (m.mean - best) / sqrt(m.variance);
            double hd = h.to_double();
            auto [flo, fhi] = detail::log_ei_factor_bounds(hd);
            if (std::isinf(hd) && hd > 0) {
                // h beyond double range: E(h) < psi(h) / h^2 is far below anything representable.
                flo = fhi = -HUGE_VAL;
            }
            lo = log_sigma + flo;
            hi = log_sigma + fhi;
            const double slack = 1e-9 * (1.0 + std::fabs(lo));
            lo -= slack;
            hi += slack;
        }
        best_lo = std::max(best_lo, lo);
        scored.push_back({i, lo, hi});
    }

    std::vector<std::size_t> survivors;
    for (const auto& s : scored) {
        if (best_lo == -HUGE_VAL || s.log_hi >= best_lo) survivors.push_back(s.index);
    }
    if (exact_evaluations) *exact_evaluations = survivors.size();

    std::vector<Real> exact;
    exact.reserve(survivors.size());
    Real top = ctx.zero();
    for (std::size_t idx : survivors) {
        const PosteriorMoments& m = moments[idx];
        exact.push_back(ei_from_moments(m.mean, m.variance, best, ctx));
        if (exact.back() > top) top = exact.back();
    }
    const Real floor = top * (1 - ctx.tolerance(ctx.digits() / 2));
    std::optional<std::size_t> winner;
    for (std::size_t j = 0; j < survivors.size(); ++j) {
        if (exact[j] < floor) continue;
        const std::size_t idx = survivors[j];
        if (!winner) {
            winner = j;
            continue;
        }
        const Real& cur = candidates[survivors[*winner]];
        const Real& cand = candidates[idx];
        const Real ac = abs(cand);
        const Real aw = abs(cur);
        if (ac < aw || (ac == aw && cand < cur)) winner = j;
    }
    const std::size_t idx = survivors[*winner];
    return {candidates[idx], exact[*winner], moments[idx]};
}

/// Arg-max of EI over the grid, skipping design points.
inline EIEvaluation argmax_ei(const TrajectoryState& state, const CandidateGrid& grid) {
    const PrecisionContext& ctx = state.context();
    std::vector<Real> all = grid.generate(ctx);
    std::vector<Real> candidates;
    candidates.reserve(all.size());
    for (Real& c : all) {
        if (state.find(c) < 0) candidates.push_back(std::move(c));
    }
    if (candidates.empty()) fail(ErrorKind::EmptyGrid, "grid has no points outside the design");
    PosteriorModel model(state);
    auto moments_of = [&](std::size_t i) { return model.at(candidates[i]); };
    return argmax_over(candidates, moments_of, state.best(), ctx);
}

// ---------------------------------------------------------------------------
// Objectives and the optimization loop

enum class ObjectiveKind {
    NegKernel,    // f = -G(x), the run's own covariance centred at 0
    NegGaussian,  // f = -e^{-x^2} regardless of the kernel
};

inline std::string_view to_string(ObjectiveKind k) {
    return k == ObjectiveKind::NegKernel ? "neg_kernel" : "neg_gaussian";
}

inline ObjectiveKind parse_objective(std::string_view name) {
    if (name == "neg_kernel") return ObjectiveKind::NegKernel;
    if (name == "neg_gaussian") return ObjectiveKind::NegGaussian;
    fail(ErrorKind::ConfigError, "unknown objective '" + std::string(name) + "' (expected neg_kernel or neg_gaussian)");
}

inline Real evaluate_objective(ObjectiveKind objective, const KernelSpec& kernel, const Real& x,
                               const PrecisionContext& ctx) {
    if (objective == ObjectiveKind::NegKernel) return -covariance(kernel, x, ctx);
    return -exp(-sqr(x));
}

struct IterationRecord {
    long k;  // index of the point this iteration produced (x_k)
    Real x;
    Real ei;  // I_{k-1}(x_k)
    Real objective;
    PosteriorMoments moments;
    Real condition;             // pivot ratio of the Gram matrix on x_1..x_{k-1}
    std::size_t clamped = 0;    // candidates whose variance was clamped to 0
    std::size_t exact_evaluations = 0;
};

struct TrajectoryAbort {
    ErrorKind kind;
    long design_size;  // number of points in the design whose factorization failed
    std::string message;
};

struct TrajectoryResult {
    std::vector<IterationRecord> iterations;
    TrajectoryState final_state;
    std::optional<TrajectoryAbort> abort;

    /// Points x_1..x_K in order.
    [[nodiscard]] std::vector<Real> points() const {
        auto p = final_state.points();
        return {p.begin(), p.end()};
    }
};

/// Runs `steps` EI iterations from x1. Linear-algebra failures end the run and
/// are returned alongside the iterations completed so far.
inline TrajectoryResult run_trajectory(const KernelSpec& kernel, ObjectiveKind objective, const Real& x1, long steps,
                                       const CandidateGrid& grid, const PrecisionContext& ctx,
                                       const SpdOptions& options = {}) {
    if (steps < 1) fail(ErrorKind::InvalidArgument, "steps must be at least 1");
    TrajectoryState state(kernel, ctx, x1, evaluate_objective(objective, kernel, x1, ctx));
    TrajectoryResult result{{}, state, std::nullopt};

    std::vector<Real> candidates = grid.generate(ctx);
    // rows[i][k] = G(candidate_i - x_k), extended by one column per iteration.
    std::vector<std::vector<Real>> rows(candidates.size());
    std::vector<bool> active(candidates.size(), true);
    auto extend_rows = [&](const Real& new_point) {
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (candidates[i] == new_point) active[i] = false;
            if (active[i]) rows[i].push_back(covariance(kernel, candidates[i] - new_point, ctx));
        }
    };
    extend_rows(x1);

    for (long step = 1; step <= steps; ++step) {
        const long k_next = static_cast<long>(state.size()) + 1;
        try {
            PosteriorModel model(state, options);
            std::vector<std::size_t> live;
            std::vector<Real> pts;
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                if (active[i]) {
                    live.push_back(i);
                    pts.push_back(candidates[i]);
                }
            }
            std::size_t clamped = 0;
            auto moments_of = [&](std::size_t j) {
                PosteriorMoments m = model.from_row(pts[j], rows[live[j]]);
                if (m.clamped) ++clamped;
                return m;
            };
            std::size_t exact = 0;
            EIEvaluation win = argmax_over(pts, moments_of, state.best(), ctx, &exact);
            Real f = evaluate_objective(objective, kernel, win.point, ctx);
            IterationRecord rec{k_next, win.point, std::move(win.ei), f, std::move(win.moments), model.condition(),
                                clamped, exact};
            state = state.add_point(rec.x, f);
            extend_rows(rec.x);
            result.iterations.push_back(std::move(rec));
            result.final_state = state;
        } catch (const LabError& e) {
            if (e.kind() != ErrorKind::NonPositivePivot && e.kind() != ErrorKind::NegativeVariance &&
                e.kind() != ErrorKind::EmptyGrid) {
                throw;
            }
            result.abort = TrajectoryAbort{e.kind(), static_cast<long>(state.size()), e.what()};
            break;
        }
    }
    return result;
}

}  // namespace eilab
