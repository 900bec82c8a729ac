#include <gtest/gtest.h>

#include <random>

#include "eilab/posterior.hpp"

using namespace eilab;

namespace {

const PrecisionContext kCtx(300, 20);

TrajectoryState seeded(const KernelSpec& k, const char* x1, const char* f1) {
    return TrajectoryState(k, kCtx, kCtx.parse(x1), kCtx.parse(f1));
}

TrajectoryState random_design(const KernelSpec& k, std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> pts;
    while (static_cast<int>(pts.size()) < n) {
        double v = std::round(u(rng) * 1e4) / 1e4;
        bool ok = true;
        for (double p : pts) ok = ok && std::fabs(p - v) > 0.05;
        if (ok) pts.push_back(v);
    }
    TrajectoryState s(k, kCtx, kCtx.from_double(pts[0]), kCtx.from_double(u(rng)));
    for (int i = 1; i < n; ++i) s = s.add_point(kCtx.from_double(pts[static_cast<std::size_t>(i)]), kCtx.from_double(u(rng)));
    return s;
}

}  // namespace

TEST(Posterior, ObservedPointReturnsObservation) {
    auto s = seeded(KernelSpec::unit_gaussian(kCtx), "0", "-1");
    PosteriorMoments m = posterior(s, kCtx.zero());
    EXPECT_EQ(m.mean, -1);
    EXPECT_TRUE(m.variance.is_zero());
}

TEST(Posterior, SingleObservationVariance) {
    auto s = seeded(KernelSpec::unit_gaussian(kCtx), "0", "-1");
    PosteriorMoments m = posterior(s, kCtx.from(1));
    Real expected = 1 - exp(kCtx.from(-2));
    EXPECT_LE(abs(m.variance - expected), kCtx.working_tolerance());
    EXPECT_NEAR(m.variance.to_double(), 0.8646647, 1e-7);
}

TEST(Posterior, ExactInterpolantForNegativeKernel) {
    // f = -G and x_1 = 0: the mean equals -G everywhere, bit for bit.
    const KernelSpec k = KernelSpec::unit_gaussian(kCtx);
    auto f = [&](const Real& x) { return -covariance(k, x, kCtx); };
    TrajectoryState s(k, kCtx, kCtx.zero(), f(kCtx.zero()));
    for (const char* x : {"-0.63", "0.77", "0.23", "-0.1", "0.0036", "-7.3e-6"}) s = s.add_point(kCtx.parse(x), f(kCtx.parse(x)));
    PosteriorModel model(s);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        Real x = kCtx.from_double(u(rng));
        EXPECT_LE(abs(model.at(x).mean - f(x)), kCtx.tolerance(kCtx.digits() - 2 * kCtx.guard_digits()));
    }
}

TEST(Posterior, InterpolatesAndVanishesAtDesignPoints) {
    std::mt19937_64 rng(2);
    const KernelSpec k = KernelSpec::unit_gaussian(kCtx);
    TrajectoryState s = random_design(k, rng, 6);
    PosteriorModel model(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        // Route through the solve rather than the design-point shortcut.
        PosteriorMoments m = model.from_row(s.points()[i], s.covariance_row(s.points()[i]));
        EXPECT_LE(abs(m.mean - s.values()[i]), kCtx.tolerance(kCtx.digits() - 2 * kCtx.guard_digits()));
        EXPECT_LE(m.variance, kCtx.tolerance(kCtx.digits() - 2 * kCtx.guard_digits()));
        EXPECT_TRUE(model.at(s.points()[i]).variance.is_zero());
    }
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) EXPECT_GT(model.at(kCtx.from_double(u(rng))).variance, 0);
}

TEST(Posterior, ConditioningNeverIncreasesVariance) {
    std::mt19937_64 rng(3);
    const KernelSpec k = KernelSpec::unit_gaussian(kCtx);
    TrajectoryState s = random_design(k, rng, 3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Real> probes;
    for (int i = 0; i < 20; ++i) probes.push_back(kCtx.from_double(u(rng)));
    for (int step = 0; step < 4; ++step) {
        PosteriorModel before(s);
        TrajectoryState next = s.add_point(kCtx.parse(step % 2 ? "0.91" : "-0.47").rounded(kCtx.bits()) / (step + 1),
                                           kCtx.zero());
        PosteriorModel after(next);
        for (const Real& p : probes) {
            EXPECT_LE(after.at(p).variance, before.at(p).variance + kCtx.tolerance(kCtx.digits() / 2));
        }
        s = next;
    }
}

TEST(TrajectoryState, AddPointSemantics) {
    auto s = seeded(KernelSpec::unit_gaussian(kCtx), "0", "-1");
    auto t = s.add_point(kCtx.parse("0.5"), kCtx.parse("3"));
    EXPECT_EQ(t.size(), 2u);
    EXPECT_EQ(s.size(), 1u);
    EXPECT_EQ(t.best(), -1);
    auto u = t.add_point(kCtx.parse("-0.5"), kCtx.parse("-2"));
    EXPECT_EQ(u.best(), -2);
    try {
        (void)u.add_point(kCtx.parse("0.5"), kCtx.zero());
        FAIL();
    } catch (const LabError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DuplicatePoint);
    }
    EXPECT_THROW(u.add_point(kCtx.parse("1.5"), kCtx.zero()), LabError);
}

TEST(Posterior, NearDuplicateDesignSurfacesPivotFailure) {
    auto s = seeded(KernelSpec::unit_gaussian(kCtx), "0", "0");
    s = s.add_point(kCtx.pow10(-200), kCtx.zero());
    try {
        PosteriorModel m(s);
        FAIL();
    } catch (const LabError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonPositivePivot);
    }
    // The opt-in diagonal shift makes the same design factorizable.
    EXPECT_NO_THROW(PosteriorModel(s, SpdOptions{true}));
}

TEST(SpectralOracle, AgreesWithGramFormula) {
    std::mt19937_64 rng(4);
    const KernelSpec k = KernelSpec::unit_gaussian(kCtx);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n : {1, 2, 3, 5}) {
        TrajectoryState s = random_design(k, rng, n);
        Real x = kCtx.from_double(u(rng));
        Real var = posterior(s, x).variance;
        Real oracle = variance_spectral_oracle(s, x, kCtx);
        EXPECT_LE(relative_difference(var, oracle), kCtx.tolerance(kCtx.digits() / 4)) << "K = " << n;
        auto lambda = PosteriorModel(s).weights(x);
        Real qf = variance_quadratic_form(k, x, s.points(), lambda, kCtx);
        EXPECT_LE(relative_difference(var, qf), kCtx.tolerance(kCtx.digits() / 4));
    }
}

TEST(SpectralOracle, OrnsteinUhlenbeckPath) {
    const PrecisionContext ctx(80, 10);
    const KernelSpec k = KernelSpec::ornstein_uhlenbeck(ctx.parse("1"), UnitVariance{}, ctx);
    TrajectoryState s(k, ctx, ctx.parse("-0.4"), ctx.zero());
    s = s.add_point(ctx.parse("0.3"), ctx.zero());
    Real x = ctx.parse("0.1");
    EXPECT_LE(relative_difference(posterior(s, x).variance, variance_spectral_oracle(s, x, ctx)),
              ctx.tolerance(ctx.digits() / 4));
}

TEST(SpectralOracle, ZeroAtDesignPointAndSizeLimit) {
    auto s = seeded(KernelSpec::unit_gaussian(kCtx), "0.2", "0");
    EXPECT_TRUE(variance_spectral_oracle(s, kCtx.parse("0.2"), kCtx).is_zero());
    for (int i = 1; i <= 8; ++i) s = s.add_point(kCtx.from(i) / 10 - 1, kCtx.zero());
    EXPECT_THROW(variance_spectral_oracle(s, kCtx.parse("0.5"), kCtx), LabError);
}
