#pragma once

// Gaussian-process conditioning on exact (noise-free) observations.
//
// With G the Gram matrix of the design, g the covariances between the query
// and the design, and f the observed values, the conditional moments are
//
//     mean     = g^t G^{-1} f
//     variance = G(0) - g^t G^{-1} g.
//
// Both are evaluated through one LDL^t factorization: with y = L^{-1} g and
// z = L^{-1} f, mean = sum y_k z_k / d_k and variance = G(0) - sum y_k^2 / d_k.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eilab/error.hpp"
#include "eilab/kernel.hpp"
#include "eilab/linalg.hpp"
#include "eilab/quadrature.hpp"
#include "eilab/real.hpp"

namespace eilab {

class TrajectoryState {
public:
    TrajectoryState(KernelSpec kernel, const PrecisionContext& ctx, const Real& x1, const Real& f1)
        : kernel_(std::move(kernel)), ctx_(ctx), best_(f1) {
        check_domain(x1);
        points_.push_back(x1);
        values_.push_back(f1);
    }

    /// New snapshot with (x, f_x) appended.
    [[nodiscard]] TrajectoryState add_point(const Real& x, const Real& f_x) const {
        check_domain(x);
        for (const Real& p : points_) {
            if (p == x) fail(ErrorKind::DuplicatePoint, "point " + x.to_decimal(20) + " is already in the design");
        }
        TrajectoryState next = *this;
        next.points_.push_back(x);
        next.values_.push_back(f_x);
        if (f_x < next.best_) next.best_ = f_x;
        return next;
    }

    [[nodiscard]] std::size_t size() const { return points_.size(); }
    [[nodiscard]] std::span<const Real> points() const { return points_; }
    [[nodiscard]] std::span<const Real> values() const { return values_; }
    /// f*_K, the smallest observed value.
    [[nodiscard]] const Real& best() const { return best_; }
    [[nodiscard]] const KernelSpec& kernel() const { return kernel_; }
    [[nodiscard]] const PrecisionContext& context() const { return ctx_; }

    /// Index of x among the design points, or -1.
    [[nodiscard]] long find(const Real& x) const {
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (points_[i] == x) return static_cast<long>(i);
        }
        return -1;
    }

    [[nodiscard]] RealMatrix gram() const {
        const std::size_t n = points_.size();
        RealMatrix g(n, n, ctx_.zero());
        for (std::size_t i = 0; i < n; ++i) {
            g(i, i) = kernel_.variance();
            for (std::size_t j = 0; j < i; ++j) {
                g(i, j) = covariance(kernel_, points_[i] - points_[j], ctx_);
                g(j, i) = g(i, j);
            }
        }
        return g;
    }

    /// Covariances G(x - x_k) in design order.
    [[nodiscard]] std::vector<Real> covariance_row(const Real& x) const {
        std::vector<Real> row;
        row.reserve(points_.size());
        for (const Real& p : points_) row.push_back(covariance(kernel_, x - p, ctx_));
        return row;
    }

private:
    static void check_domain(const Real& x) {
        if (abs(x) > 1) fail(ErrorKind::InvalidArgument, "design points must lie in [-1, 1], got " + x.to_decimal(20));
    }

    KernelSpec kernel_;
    PrecisionContext ctx_;
    std::vector<Real> points_;
    std::vector<Real> values_;
    Real best_;
};

struct PosteriorMoments {
    Real mean;
    Real variance;
    Real point;
    /// Set when a slightly negative variance from cancellation was replaced by 0.
    bool clamped = false;
};

/// Factorizes the Gram matrix once; queries then cost one triangular solve.
class PosteriorModel {
public:
    explicit PosteriorModel(const TrajectoryState& state, const SpdOptions& options = {})
        : state_(&state), factor_(ldl_factor(state.gram(), state.context(), options)),
          jitter_(options.jitter) {
        z_ = factor_.forward(state.values());
        const PrecisionContext& ctx = state.context();
        clamp_floor_ = -(ctx.tolerance(ctx.digits() - 2 * ctx.guard_digits()) * state.kernel().variance());
    }

    [[nodiscard]] PosteriorMoments at(const Real& x) const {
        const long hit = state_->find(x);
        if (hit >= 0) {
            return {state_->values()[static_cast<std::size_t>(hit)], state_->context().zero(), x, false};
        }
        return from_row(x, state_->covariance_row(x));
    }

    /// Moments at x given the precomputed row G(x - x_k); x must not be a design point.
    [[nodiscard]] PosteriorMoments from_row(const Real& x, std::span<const Real> row) const {
        const PrecisionContext& ctx = state_->context();
        std::vector<Real> y = factor_.forward(row);
        auto d = factor_.pivots();
        Real mean = ctx.zero();
        Real reduction = ctx.zero();
        Real t(ctx.bits());
        for (std::size_t k = 0; k < y.size(); ++k) {
            if (y[k].is_zero()) continue;
            t = y[k] / d[k];
            if (!z_[k].is_zero()) mean += t * z_[k];
            reduction += t * y[k];
        }
        Real variance = state_->kernel().variance() - reduction;
        bool clamped = false;
        if (variance < 0) {
            if (variance < clamp_floor_) {
                fail(ErrorKind::NegativeVariance, "posterior variance " + variance.to_decimal(6) + " at x = " +
                                                      x.to_decimal(20) + " is below the clamp floor");
            }
            variance = ctx.zero();
            clamped = true;
        }
        return {std::move(mean), std::move(variance), x, clamped};
    }

    /// Kriging weights lambda = G^{-1} g.
    [[nodiscard]] std::vector<Real> weights(const Real& x) const { return factor_.solve(state_->covariance_row(x)); }

    [[nodiscard]] const LdlFactor& factor() const { return factor_; }
    [[nodiscard]] const TrajectoryState& state() const { return *state_; }
    [[nodiscard]] bool jitter_used() const { return jitter_; }
    [[nodiscard]] Real condition() const { return condition_estimate(factor_); }

private:
    const TrajectoryState* state_;
    LdlFactor factor_;
    bool jitter_;
    std::vector<Real> z_;
    Real clamp_floor_{MPFR_PREC_MIN};
};

inline PosteriorMoments posterior(const TrajectoryState& state, const Real& x) {
    if (abs(x) > 1) fail(ErrorKind::InvalidArgument, "query must lie in [-1, 1]");
    const long hit = state.find(x);
    if (hit >= 0) return {state.values()[static_cast<std::size_t>(hit)], state.context().zero(), x, false};
    return PosteriorModel(state).at(x);
}

/// G(0) - 2 sum lambda_k G(x - x_k) + sum_{k,l} lambda_k lambda_l G(x_k - x_l), the
/// squared L^2(Ghat) distance between e^{ixt} and sum lambda_k e^{i x_k t}.
inline Real variance_quadratic_form(const KernelSpec& kernel, const Real& x, std::span<const Real> nodes,
                                    std::span<const Real> weights, const PrecisionContext& ctx) {
    if (nodes.size() != weights.size()) fail(ErrorKind::DimensionMismatch, "nodes and weights differ in length");
    Real total = kernel.variance();
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        total -= 2 * weights[k] * covariance(kernel, x - nodes[k], ctx);
        total += sqr(weights[k]) * kernel.variance();
        for (std::size_t l = 0; l < k; ++l) {
            total += 2 * weights[k] * weights[l] * covariance(kernel, nodes[k] - nodes[l], ctx);
        }
    }
    return total;
}

/// Conditional variance as the spectral integral of |e^{ixt} - sum lambda_k e^{i x_k t}|^2 Ghat(t)
/// with lambda = G^{-1} g, evaluated by quadrature.
inline Real variance_spectral_oracle(const TrajectoryState& state, const Real& x, const PrecisionContext& ctx) {
    if (state.size() > 8) fail(ErrorKind::InvalidArgument, "spectral variance oracle supports at most 8 points");
    if (state.find(x) >= 0) return ctx.zero();
    const KernelSpec& kernel = state.kernel();
    const std::vector<Real> lambda = PosteriorModel(state).weights(x);
    auto points = state.points();
    const int target = ctx.digits() / 2;

    if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&kernel.shape())) {
        // Polynomially decaying density: integrate each cosine moment separately on
        // the oscillatory route, then assemble the quadratic form.
        TanhSinh rule(ctx, target);
        auto moment = [&](const Real& lag) { return kernel.variance() * cauchy_cosine_transform(ou->theta, lag, rule); };
        Real total = moment(ctx.zero());
        for (std::size_t k = 0; k < lambda.size(); ++k) {
            total -= 2 * lambda[k] * moment(x - points[k]);
            total += sqr(lambda[k]) * moment(ctx.zero());
            for (std::size_t l = 0; l < k; ++l) total += 2 * lambda[k] * lambda[l] * moment(points[k] - points[l]);
        }
        return total;
    }

    Real weight_bound = ctx.from(1);
    for (const Real& l : lambda) weight_bound += abs(l);
    const double extra_log = 2.0 * weight_bound.log_abs();
    auto residual_sq = [&](const Real& t) {
        Real re = cos(x * t);
        Real im = sin(x * t);
        for (std::size_t k = 0; k < lambda.size(); ++k) {
            Real phase = points[k] * t;
            re -= lambda[k] * cos(phase);
            im -= lambda[k] * sin(phase);
        }
        return sqr(re) + sqr(im);
    };
    return integrate_against_density(kernel, residual_sq, extra_log, ctx, target);
}

}  // namespace eilab
