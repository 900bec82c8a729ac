// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "eilab/lab/commands.hpp"

using namespace eilab;
using namespace eilab::lab;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

// Regression baselines measured on the first verified run at the default settings.
constexpr long kEnvelopeThreshold = 5;
constexpr long kSandwichK0 = 2;
constexpr long kLowPrecisionFailingK = 8;

std::string sci(const Real& x, int sig = 3) { return x.to_decimal(sig); }

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

/// Mantissa m in [1, 10) and decimal exponent of |x|, read from 40 significant digits.
std::pair<double, int> mantissa_exponent(const Real& x) {
    const std::string s = abs(x).to_decimal(40);
    const auto e = s.find('e');
    return {std::stod(s.substr(0, e)), std::stoi(s.substr(e + 1))};
}

/// Two-significant-digit agreement: the printed reference equals our value either
/// rounded or truncated to two digits. The reference column mixes both styles.
bool matches_two_digits(const Real& ours, const char* reference) {
    auto [m, e] = mantissa_exponent(ours);
    const double ref = std::fabs(std::stod(reference));
    const double scale = std::pow(10.0, e);
    for (double cand : {std::round(m * 10) / 10, std::floor(m * 10) / 10}) {
        if (std::fabs(cand * scale - ref) <= 1e-9 * ref) return true;
    }
    return false;
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

struct DefaultRun {
    PrecisionContext ctx;
    KernelSpec kernel;
    TrajectoryResult result;
};

const DefaultRun& default_run() {
    static const DefaultRun run = [] {
        const ExperimentConfig cfg = default_config();
        PrecisionContext ctx = make_context(cfg);
        KernelSpec kernel = make_kernel(cfg, ctx);
        TrajectoryResult result = lab::detail::run_from_config(cfg, ctx);
        return DefaultRun{ctx, kernel, std::move(result)};
    }();
    return run;
}

Verdict ac1_reference_trajectory() {
    const auto& run = default_run();
    if (run.result.abort) return {false, "run aborted: " + run.result.abort->message};
    static const char* ref_x[] = {"0.63", "0.77", "0.23", "0.1", "0.0036", "7.3e-06", "2.8e-11", "4.1e-22", "7.9e-44"};
    static const char* ref_ei[] = {"0.16",    "0.13",    "0.025",   "0.0013", "3.4e-06",
                                   "1.4e-11", "2.2e-22", "4.5e-44", "1.7e-87"};
    if (run.result.iterations.size() != 9) return {false, "expected 9 iterations"};
    std::string mismatches;
    for (std::size_t i = 0; i < 9; ++i) {
        const auto& it = run.result.iterations[i];
        if (!matches_two_digits(it.x, ref_x[i])) mismatches += " |x_" + std::to_string(it.k) + "|=" + sci(abs(it.x));
        if (!matches_two_digits(it.ei, ref_ei[i])) mismatches += " I_" + std::to_string(it.k) + "=" + sci(it.ei);
    }
    const auto& last = run.result.iterations.back();
    std::string d = "K=2..10 at 2 digits, |x_10|=" + sci(abs(last.x)) + " I=" + sci(last.ei);
    if (!mismatches.empty()) return {false, "mismatch:" + mismatches};
    return {true, d};
}

Verdict ac2_ei_oracle() {
    const PrecisionContext ctx(300, 20);
    const KernelSpec kernel = KernelSpec::unit_gaussian(ctx);
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> uk(1, 6);
    std::uniform_real_distribution<double> uf(-1.0, 1.0);
    const Real tol = ctx.pow10(-20);
    Real worst = ctx.zero();
    for (int trial = 0; trial < 20; ++trial) {
        const auto k = static_cast<std::size_t>(uk(rng));
        std::vector<double> pts = lab::detail::distinct_uniform(rng, k + 1, -1.0, 1.0, 0.05);
        TrajectoryState state(kernel, ctx, ctx.from_double(pts[0]), ctx.from_double(uf(rng)));
        for (std::size_t i = 1; i < k; ++i) state = state.add_point(ctx.from_double(pts[i]), ctx.from_double(uf(rng)));
        const Real x = ctx.from_double(pts[k]);
        PosteriorMoments m = posterior(state, x);
        const Real closed = ei_from_moments(m.mean, m.variance, state.best(), ctx);
        const Real quad = ei_integral_oracle(m.mean, m.variance, state.best(), ctx);
        worst = max(worst, relative_difference(closed, quad));
    }
    return {worst <= tol, "20 states K<=6, worst relative difference " + sci(worst)};
}

Verdict ac3_posterior_oracle() {
    const PrecisionContext ctx(300, 20);
    const KernelSpec kernel = KernelSpec::unit_gaussian(ctx);
    std::mt19937_64 rng(2025);
    std::uniform_int_distribution<int> uk(1, 5);
    const Real tol = ctx.pow10(-20);
    Real worst = ctx.zero();
    for (int trial = 0; trial < 10; ++trial) {
        const auto k = static_cast<std::size_t>(uk(rng));
        std::vector<double> pts = lab::detail::distinct_uniform(rng, k + 1, -1.0, 1.0, 0.05);
        TrajectoryState state(kernel, ctx, ctx.from_double(pts[0]), ctx.zero());
        for (std::size_t i = 1; i < k; ++i) state = state.add_point(ctx.from_double(pts[i]), ctx.zero());
        const Real x = ctx.from_double(pts[k]);
        worst = max(worst, relative_difference(posterior(state, x).variance, variance_spectral_oracle(state, x, ctx)));
    }
    return {worst <= tol, "10 designs K<=5, worst relative difference " + sci(worst)};
}

Verdict ac4_vandermonde() {
    const PrecisionContext ctx(300, 20);
    std::mt19937_64 rng(2026);
    std::uniform_int_distribution<int> uk(1, 8);
    const Real tol = ctx.pow10(-100);
    Real worst = ctx.zero();
    for (int trial = 0; trial < 50; ++trial) {
        const auto k = static_cast<std::size_t>(uk(rng));
        std::vector<double> angles = lab::detail::distinct_uniform(rng, k + 1, 0.0, 2 * M_PI, 1e-3);
        const Complex z = Complex::polar_unit(ctx.from_double(angles[0]));
        std::vector<Complex> zs;
        for (std::size_t i = 1; i <= k; ++i) zs.push_back(Complex::polar_unit(ctx.from_double(angles[i])));
        worst = max(worst, relative_difference(vandermonde_distance(z, zs, ctx), gram_distance_oracle(z, zs, ctx)));
    }
    return {worst <= tol, "50 unit-circle configurations K<=8, worst relative difference " + sci(worst)};
}

Verdict ac5_exact_interpolant() {
    const auto& run = default_run();
    const PrecisionContext& ctx = run.ctx;
    const auto pts = run.result.points();
    if (pts.size() < 10) return {false, "trajectory shorter than 10 points"};
    std::mt19937_64 rng(2027);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Real> probes;
    for (int i = 0; i < 50; ++i) probes.push_back(ctx.from_double(u(rng)));
    const Real tol = ctx.pow10(-270);
    Real worst = ctx.zero();
    auto f = [&](const Real& x) { return -covariance(run.kernel, x, ctx); };
    TrajectoryState state(run.kernel, ctx, pts[0], f(pts[0]));
    for (std::size_t k = 1; k <= 10; ++k) {
        if (k > 1) state = state.add_point(pts[k - 1], f(pts[k - 1]));
        PosteriorModel model(state);
        for (const Real& x : probes) worst = max(worst, abs(model.at(x).mean - f(x)));
    }
    return {worst <= tol, "K=1..10 x 50 probes, worst |mean + G| " + sci(worst)};
}

Verdict ac6_envelope() {
    const auto& run = default_run();
    const auto pts = run.result.points();
    auto reports = theorem3_bounds_check(pts, run.kernel, 2, 9, run.ctx);
    std::vector<long> failing;
    for (const auto& r : reports) {
        if (!r.satisfied && (failing.empty() || failing.back() != r.k)) failing.push_back(r.k);
    }
    long covered = 0;
    for (const auto& r : reports) covered = std::max(covered, r.k);
    bool ok = covered == 9;
    std::string list;
    for (long k : failing) {
        list += (list.empty() ? "" : ",") + std::to_string(k);
        if (k >= kEnvelopeThreshold) ok = false;
    }
    return {ok, "K=2..9 checked, failing K: {" + list + "}, required clean from K=" +
                    std::to_string(kEnvelopeThreshold)};
}

Verdict ac7_sandwich() {
    const PrecisionContext ctx(300, 20);
    const KernelSpec kernel = KernelSpec::unit_gaussian(ctx);
    SandwichSweep a = theorem2_sweep(kernel, 2, 25, 20, 42, ctx);
    SandwichSweep b = theorem2_sweep(kernel, 2, 25, 20, 43, ctx);
    auto show = [](const std::optional<long>& k) { return k ? std::to_string(*k) : std::string("none"); };
    const bool ok = a.k0 && b.k0 && a.holds_beyond_k0 && b.holds_beyond_k0 && a.k0 == b.k0 && *a.k0 == kSandwichK0;
    return {ok, "K=2..25 x 20 configs, K0 = " + show(a.k0) + " (seed 42), " + show(b.k0) +
                    " (seed 43), holds beyond K0: " + (a.holds_beyond_k0 && b.holds_beyond_k0 ? "yes" : "no")};
}

Verdict ac8_decay() {
    const PrecisionContext ctx(300, 20);
    const KernelSpec kernel = KernelSpec::unit_gaussian(ctx);
    DecayScan scan = neb_decay_scan(kernel, ctx.zero(), ctx.parse("0.1"), ctx.parse("0.2"), 6, 14, 6, 14, ctx);
    bool dominated = true;
    for (const auto& p : scan.points) dominated = dominated && p.posterior_variance <= p.error_sq;
    const bool ok = scan.slope <= -std::log(4.0) && dominated;
    return {ok, "slope " + sci(scan.slope) + " vs -ln4 = -1.39 over K=6..14, sigma^2(0) at K=14 " +
                    sci(scan.points.back().posterior_variance) + ", bounded by error^2: " + (dominated ? "yes" : "no")};
}

Verdict ac9_rate_function() {
    const PrecisionContext ctx(300, 20);
    std::mt19937_64 rng(2028);
    std::uniform_real_distribution<double> ua(0.1, 4.0), ub(1.2, 5.0), uc(0.2, 3.0);
    std::uniform_int_distribution<long> uk(2, 200);
    Real worst = ctx.zero();
    for (int trial = 0; trial < 20; ++trial) {
        KernelSpec k = KernelSpec::spectral_power(ctx.from_double(ua(rng)), ctx.from_double(ub(rng)),
                                                  ctx.from_double(uc(rng)), ctx.from(1), ctx);
        LegendreProfile p = f_profile(k, uk(rng), ctx);
        worst = max(worst, relative_difference(p.t_star_value, p.numeric_t_star));
        worst = max(worst, relative_difference(*p.f_value, *p.numeric_f_value));
    }
    const KernelSpec k = KernelSpec::spectral_power(ctx.from(1), ctx.from(2), ctx.from(1), ctx.from(1), ctx);
    bool decreasing = true;
    Real prev = f_of_k(k, 10, ctx) / 10;
    for (long kk = 11; kk <= 200; ++kk) {
        Real cur = f_of_k(k, kk, ctx) / kk;
        if (!(cur < prev)) decreasing = false;
        prev = std::move(cur);
    }
    return {worst <= ctx.pow10(-100) && decreasing, "20 random (a,b,K), worst relative difference " + sci(worst) +
                                                         ", F/K strictly decreasing on 10..200: " +
                                                         (decreasing ? "yes" : "no")};
}

Verdict ac10_contrast() {
    ExperimentConfig ou;
    ou.kernel = "ornstein_uhlenbeck";
    ou.kernel_theta = "1";
    ou.objective = "neg_gaussian";
    ou.steps = 30;
    ExperimentConfig gauss;
    gauss.objective = "neg_gaussian";
    gauss.steps = 30;
    const Json ra = cmd_contrast(ou).report;
    const Json rb = cmd_contrast(gauss).report;
    const Json& a = ra["comparison"];
    const Json& b = rb["comparison"];
    auto describe = [](const Json& r) {
        const Json& c = r["comparison"];
        auto gap = [&](const char* key) {
            return c.contains(key) ? sci(std::stod(c[key].get<std::string>())) : std::string("n/a");
        };
        std::string s = "gap(K=" + std::to_string(c["reference_K"].get<long>()) + ")=" + gap("gap_at_reference") +
                        " gap(K=" + std::to_string(c["compare_K"].get<long>()) + ")=" + gap("gap_at_compare");
        if (!r["abort"].is_null()) {
            s += " [stopped: " + r["abort"]["error"].get<std::string>() + " at K=" +
                 std::to_string(r["abort"]["failing_K"].get<long>()) + "]";
        }
        return s;
    };
    const bool ou_shrinks = a["gap_shrinks"].is_boolean() && a["gap_shrinks"].get<bool>() && a["compare_K"] == 30;
    const bool gauss_stalls = b["gap_shrinks"].is_boolean() && !b["gap_shrinks"].get<bool>();
    return {ou_shrinks && gauss_stalls, "OU " + describe(ra) + "; Gaussian " + describe(rb)};
}

Verdict ac11_precision_exhaustion() {
    ExperimentConfig cfg;
    cfg.digits = 50;
    const PrecisionContext ctx = make_context(cfg);
    std::vector<long> failing;
    for (int rep = 0; rep < 2; ++rep) {
        TrajectoryResult r = lab::detail::run_from_config(cfg, ctx);
        if (!r.abort || r.abort->kind != ErrorKind::NonPositivePivot) return {false, "run did not abort with NonPositivePivot"};
        failing.push_back(r.abort->design_size);
    }
    const bool ok = failing[0] < 10 && failing[0] == failing[1] && failing[0] == kLowPrecisionFailingK;
    return {ok, "50 digits: NonPositivePivot at K = " + std::to_string(failing[0]) + " and " +
                    std::to_string(failing[1]) + " (baseline " + std::to_string(kLowPrecisionFailingK) + ")"};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"AC1  reference trajectory", ac1_reference_trajectory},
        {"AC2  EI closed form vs quadrature", ac2_ei_oracle},
        {"AC3  posterior variance vs spectral quadrature", ac3_posterior_oracle},
        {"AC4  Vandermonde distance vs Gram ratio", ac4_vandermonde},
        {"AC5  exact interpolant along trajectory", ac5_exact_interpolant},
        {"AC6  trajectory envelope", ac6_envelope},
        {"AC7  conditional-variance sandwich", ac7_sandwich},
        {"AC8  Lagrange error decay", ac8_decay},
        {"AC9  rate function F(K)", ac9_rate_function},
        {"AC10 consistency contrast", ac10_contrast},
        {"AC11 precision exhaustion", ac11_precision_exhaustion},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) ++failures;
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
