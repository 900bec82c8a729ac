#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "eilab/expected_improvement.hpp"
#include "eilab/kernel.hpp"
#include "eilab/lab/config.hpp"
#include "eilab/lab/report.hpp"
#include "eilab/posterior.hpp"
#include "eilab/real.hpp"
#include "eilab/theory.hpp"

namespace eilab::lab {

inline constexpr std::string_view kTieBreak = "ties within 10^(-digits/2) relative: smaller |x| first, then negative x";

inline const std::vector<std::string_view>& suite_names() {
    static const std::vector<std::string_view> names{"thm1-decay",       "thm2-sandwich", "thm3-bounds",
                                                     "lemma-vandermonde", "lemma3-tails", "ei-oracle",
                                                     "posterior-oracle"};
    return names;
}

/// Suites whose failure sets the exit status; empirical sweeps only report.
inline bool is_hard_suite(std::string_view suite) {
    return suite != "thm2-sandwich" && suite != "thm3-bounds";
}

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

/// `count` values uniform in [lo, hi] on a 10^-6 lattice, pairwise at least `min_sep` apart.
inline std::vector<double> distinct_uniform(std::mt19937_64& rng, std::size_t count, double lo, double hi,
                                            double min_sep) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> out;
    while (out.size() < count) {
        const double v = std::round(u(rng) * 1e6) / 1e6;
        if (std::all_of(out.begin(), out.end(), [&](double p) { return std::fabs(p - v) >= min_sep; })) out.push_back(v);
    }
    return out;
}

inline Json iteration_json(const IterationRecord& it, const PrecisionContext& ctx) {
    Json j = Json::object();
    j["K"] = it.k;
    j["x"] = decimal(it.x, ctx);
    j["abs_x"] = decimal(abs(it.x), ctx);
    j["ei"] = decimal(it.ei, ctx);
    j["objective"] = decimal(it.objective, ctx);
    j["mean"] = decimal(it.moments.mean, ctx);
    j["variance"] = decimal(it.moments.variance, ctx);
    j["condition_estimate"] = decimal(it.condition, ctx);
    j["clamped_variances"] = it.clamped;
    j["exact_ei_evaluations"] = it.exact_evaluations;
    return j;
}

inline Json abort_json(const std::optional<TrajectoryAbort>& abort) {
    if (!abort) return nullptr;
    Json j = Json::object();
    j["error"] = std::string(to_string(abort->kind));
    j["failing_K"] = abort->design_size;
    j["message"] = abort->message;
    return j;
}

inline Json header(std::string_view command, const ExperimentConfig& cfg, const PrecisionContext& ctx) {
    Json j = Json::object();
    j["command"] = std::string(command);
    j["digits"] = ctx.digits();
    j["guard_digits"] = ctx.guard_digits();
    j["bits"] = ctx.bits();
    j["config"] = config_json(cfg);
    return j;
}

inline TrajectoryResult run_from_config(const ExperimentConfig& cfg, const PrecisionContext& ctx) {
    const KernelSpec kernel = make_kernel(cfg, ctx);
    return run_trajectory(kernel, parse_objective(cfg.objective), ctx.parse(cfg.x1), cfg.steps, make_grid(cfg, ctx),
                          ctx, SpdOptions{cfg.jitter});
}

}  // namespace detail

inline RunReport cmd_trajectory(const ExperimentConfig& cfg) {
    validate(cfg);
    const PrecisionContext ctx = make_context(cfg);
    detail::Stopwatch clock;
    TrajectoryResult result = detail::run_from_config(cfg, ctx);

    RunReport run{"trajectory", detail::header("trajectory", cfg, ctx), {}, Json::object(), 0};
    run.report["tie_break"] = std::string(kTieBreak);
    run.report["jitter_used"] = cfg.jitter;
    Json iters = Json::array();
    CsvTable table({"K", "x_K", "abs_x_K", "I_prev"});
    const Real& x1 = result.final_state.points()[0];
    table.add({"1", decimal(x1, ctx), decimal(abs(x1), ctx), ""});
    for (const auto& it : result.iterations) {
        iters.push_back(detail::iteration_json(it, ctx));
        table.add({std::to_string(it.k), decimal(it.x, ctx), decimal(abs(it.x), ctx), decimal(it.ei, ctx)});
    }
    run.report["iterations"] = iters;
    run.report["abort"] = detail::abort_json(result.abort);
    auto pts = result.points();
    auto collapse = collapse_threshold(pts);
    run.report["collapse_threshold"] = collapse ? Json(*collapse) : Json(nullptr);
    run.table_csv = table.str();
    run.timings["total_seconds"] = clock.seconds();
    return run;
}

// ---------------------------------------------------------------------------

struct SuiteOutcome {
    std::vector<BoundReport> reports;
    Json summary = Json::object();
};

namespace suites {

inline SuiteOutcome ei_oracle(const ExperimentConfig& cfg, const PrecisionContext& ctx) {
    SuiteOutcome out;
    const KernelSpec kernel = make_kernel(cfg, ctx);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> uk(1, 6);
    std::uniform_real_distribution<double> uf(-1.0, 1.0);
    const Real tol = ctx.tolerance(ctx.digits() / 4);
    for (long trial = 0; trial < 20; ++trial) {
        const auto k = static_cast<std::size_t>(uk(rng));
        std::vector<double> pts = detail::distinct_uniform(rng, k + 1, -1.0, 1.0, 0.05);
        TrajectoryState state(kernel, ctx, ctx.from_double(pts[0]), ctx.from_double(uf(rng)));
        for (std::size_t i = 1; i < k; ++i) state = state.add_point(ctx.from_double(pts[i]), ctx.from_double(uf(rng)));
        const Real x = ctx.from_double(pts[k]);
        PosteriorMoments mom = posterior(state, x);
        const Real closed = ei_from_moments(mom.mean, mom.variance, state.best(), ctx);
        const Real quad = ei_integral_oracle(mom.mean, mom.variance, state.best(), ctx);
        BoundReport r = check_le("ei-oracle", static_cast<long>(k), abs(closed - quad), tol * abs(closed), ctx);
        r.context.emplace_back("x", x.to_decimal(20));
        r.context.emplace_back("closed_form", closed.to_decimal(30));
        r.context.emplace_back("quadrature", quad.to_decimal(30));
        r.context.emplace_back("relative_difference", relative_difference(closed, quad).to_decimal(6));
        out.reports.push_back(std::move(r));
    }
    // h = 0: EI = sigma / sqrt(2 pi) on both paths.
    const Real var = ctx.parse("0.3");
    const Real expected = sqrt(var) / sqrt(2 * ctx.pi());
    for (const Real& v : {ei_from_moments(ctx.zero(), var, ctx.zero(), ctx),
                          ei_integral_oracle(ctx.zero(), var, ctx.zero(), ctx)}) {
        out.reports.push_back(check_le("ei-h0", 0, abs(v - expected), tol * expected, ctx));
    }
    return out;
}

inline SuiteOutcome posterior_oracle(const ExperimentConfig& cfg, const PrecisionContext& ctx) {
    SuiteOutcome out;
    const KernelSpec kernel = make_kernel(cfg, ctx);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> uk(1, 5);
    const Real tol = ctx.tolerance(ctx.digits() / 4);
    for (long trial = 0; trial < 10; ++trial) {
        const auto k = static_cast<std::size_t>(uk(rng));
        std::vector<double> pts = detail::distinct_uniform(rng, k + 1, -1.0, 1.0, 0.05);
        TrajectoryState state(kernel, ctx, ctx.from_double(pts[0]), ctx.zero());
        for (std::size_t i = 1; i < k; ++i) state = state.add_point(ctx.from_double(pts[i]), ctx.zero());
        const Real x = ctx.from_double(pts[k]);
        PosteriorModel model(state);
        const Real var = model.at(x).variance;
        const Real oracle = variance_spectral_oracle(state, x, ctx);
        BoundReport r = check_le("posterior-oracle", static_cast<long>(k), abs(var - oracle), tol * abs(var), ctx);
        r.context.emplace_back("x", x.to_decimal(20));
        r.context.emplace_back("variance", var.to_decimal(30));
        r.context.emplace_back("spectral_quadrature", oracle.to_decimal(30));
        out.reports.push_back(std::move(r));
        const std::vector<Real> lambda = model.weights(x);
        const Real quad_form = variance_quadratic_form(kernel, x, state.points(), lambda, ctx);
        out.reports.push_back(
            check_le("posterior-quadratic-form", static_cast<long>(k), abs(var - quad_form), tol * abs(var), ctx));
    }
    return out;
}

inline SuiteOutcome lemma_vandermonde(const ExperimentConfig& cfg, const PrecisionContext& ctx) {
    SuiteOutcome out;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> uk(1, 8);
    std::uniform_real_distribution<double> ua(0.0, 2 * M_PI);
    const Real tol = ctx.tolerance(ctx.digits() / 2);
    Real worst = ctx.zero();
    for (long trial = 0; trial < 50; ++trial) {
        const auto k = static_cast<std::size_t>(uk(rng));
        std::vector<double> angles = detail::distinct_uniform(rng, k + 1, 0.0, 2 * M_PI, 1e-3);
        const Complex z = Complex::polar_unit(ctx.from_double(angles[0]));
        std::vector<Complex> zs;
        for (std::size_t i = 1; i <= k; ++i) zs.push_back(Complex::polar_unit(ctx.from_double(angles[i])));
        const Real rho = vandermonde_distance(z, zs, ctx);
        const Real gram = gram_distance_oracle(z, zs, ctx);
        const Real rel = relative_difference(rho, gram);
        worst = max(worst, rel);
        BoundReport r = check_le("vandermonde-oracle", static_cast<long>(k), rel, tol, ctx);
        r.context.emplace_back("rho", rho.to_decimal(30));
        r.context.emplace_back("gram_oracle", gram.to_decimal(30));
        out.reports.push_back(std::move(r));
    }
    out.summary["worst_relative_difference"] = worst.to_decimal(6);
    return out;
}

inline SuiteOutcome lemma3_tails(const ExperimentConfig&, const PrecisionContext& ctx) {
    SuiteOutcome out;
    std::vector<Real> hs;
    for (const char* h : {"0", "0.5", "1", "2", "5", "20"}) hs.push_back(ctx.parse(h));
    for (auto& t : lemma3_tail_check(hs, ctx)) {
        out.reports.push_back(std::move(t.lower));
        out.reports.push_back(std::move(t.upper));
        out.reports.push_back(std::move(t.oracle));
    }
    return out;
}

inline SuiteOutcome thm1_decay(const ExperimentConfig& cfg, const PrecisionContext& ctx) {
    SuiteOutcome out;
    const KernelSpec kernel = make_kernel(cfg, ctx);
    const DecayScan scan =
        neb_decay_scan(kernel, ctx.zero(), ctx.parse("0.1"), ctx.parse("0.2"), 4, 14, 6, 14, ctx);
    Json rows = Json::array();
    for (const auto& p : scan.points) {
        out.reports.push_back(check_le("thm1-variance-below-error", p.k, p.posterior_variance, p.error_sq, ctx));
        Json row = Json::object();
        row["K"] = p.k;
        row["error_sq"] = decimal(p.error_sq, ctx);
        row["posterior_variance"] = decimal(p.posterior_variance, ctx);
        rows.push_back(row);
    }
    const Real slope = ctx.from_double(scan.slope);
    const Real bound = -log(ctx.from(4));
    BoundReport r = check_le("thm1-slope", scan.fit_to, slope, bound, ctx);
    r.context.emplace_back("fit_range", std::to_string(scan.fit_from) + ".." + std::to_string(scan.fit_to));
    out.reports.push_back(std::move(r));
    out.summary["target"] = "0";
    out.summary["node_interval"] = {"0.1", "0.2"};
    out.summary["slope"] = scan.slope;
    out.summary["scan"] = rows;
    return out;
}

inline SuiteOutcome thm2_sandwich(const ExperimentConfig& cfg, const PrecisionContext& ctx) {
    SuiteOutcome out;
    const KernelSpec kernel = make_kernel(cfg, ctx);
    const long k_min = cfg.k_min.value_or(2);
    const long k_max = cfg.k_max.value_or(25);
    SandwichSweep sweep = theorem2_sweep(kernel, k_min, k_max, 20, cfg.seed, ctx);
    const SandwichSweep repeat = theorem2_sweep(kernel, k_min, k_max, 20, cfg.seed + 1, ctx);
    for (auto& c : sweep.checks) {
        out.reports.push_back(std::move(c.lower));
        out.reports.push_back(std::move(c.upper));
    }
    out.summary["configurations"] = sweep.configs;
    out.summary["failures_per_K"] = sweep.failures_per_k;
    out.summary["K0"] = sweep.k0 ? Json(*sweep.k0) : Json(nullptr);
    out.summary["holds_for_all_K_from_K0"] = sweep.holds_beyond_k0;
    out.summary["K0_with_seed_plus_1"] = repeat.k0 ? Json(*repeat.k0) : Json(nullptr);
    out.summary["K0_stable"] = sweep.k0 == repeat.k0;
    return out;
}

inline SuiteOutcome thm3_bounds(const ExperimentConfig& cfg, const PrecisionContext& ctx) {
    SuiteOutcome out;
    const KernelSpec kernel = make_kernel(cfg, ctx);
    TrajectoryResult run = detail::run_from_config(cfg, ctx);
    std::vector<Real> pts = run.points();
    const long k_min = cfg.k_min.value_or(2);
    const long k_max = cfg.k_max.value_or(static_cast<long>(pts.size()) - 1);
    out.reports = theorem3_bounds_check(pts, kernel, k_min, k_max, ctx);
    std::vector<long> failing;
    for (const auto& r : out.reports) {
        if (!r.satisfied && (failing.empty() || failing.back() != r.k)) failing.push_back(r.k);
    }
    std::optional<long> threshold;
    if (!out.reports.empty()) {
        const long last = out.reports.back().k;
        threshold = failing.empty() ? out.reports.front().k : failing.back() + 1;
        if (*threshold > last) threshold.reset();
    }
    bool upper_decreasing = true;
    for (std::size_t i = 3; i < out.reports.size(); i += 2) {
        if (!(out.reports[i].rhs < out.reports[i - 2].rhs)) upper_decreasing = false;
    }
    out.summary["failing_K"] = failing;
    out.summary["observed_threshold"] = threshold ? Json(*threshold) : Json(nullptr);
    out.summary["upper_bound_strictly_decreasing"] = upper_decreasing;
    auto collapse = collapse_threshold(pts);
    out.summary["collapse_threshold"] = collapse ? Json(*collapse) : Json(nullptr);
    out.summary["abort"] = detail::abort_json(run.abort);
    return out;
}

}  // namespace suites

inline SuiteOutcome run_suite(std::string_view suite, const ExperimentConfig& cfg, const PrecisionContext& ctx) {
    if (suite == "ei-oracle") return suites::ei_oracle(cfg, ctx);
    if (suite == "posterior-oracle") return suites::posterior_oracle(cfg, ctx);
    if (suite == "lemma-vandermonde") return suites::lemma_vandermonde(cfg, ctx);
    if (suite == "lemma3-tails") return suites::lemma3_tails(cfg, ctx);
    if (suite == "thm1-decay") return suites::thm1_decay(cfg, ctx);
    if (suite == "thm2-sandwich") return suites::thm2_sandwich(cfg, ctx);
    if (suite == "thm3-bounds") return suites::thm3_bounds(cfg, ctx);
    std::string known;
    for (auto n : suite_names()) known += (known.empty() ? "" : ", ") + std::string(n);
    fail(ErrorKind::UnknownSuite, "unknown suite '" + std::string(suite) + "' (known: " + known + ")");
}

inline RunReport cmd_verify(const ExperimentConfig& cfg, std::string_view suite) {
    validate(cfg);
    const PrecisionContext ctx = make_context(cfg);
    detail::Stopwatch clock;
    SuiteOutcome outcome = run_suite(suite, cfg, ctx);
    const bool passed = all_satisfied(outcome.reports);
    const bool hard = is_hard_suite(suite);

    RunReport run{"verify", detail::header("verify", cfg, ctx), bound_table(outcome.reports, ctx), Json::object(), 0};
    run.report["suite"] = std::string(suite);
    run.report["hard_assertions"] = hard;
    run.report["passed"] = passed;
    run.report["summary"] = outcome.summary;
    Json reports = Json::array();
    for (const auto& r : outcome.reports) reports.push_back(to_json(r, ctx));
    run.report["bounds"] = reports;
    run.timings["total_seconds"] = clock.seconds();
    run.exit_code = (hard && !passed) ? 1 : 0;
    return run;
}

inline RunReport cmd_spectral(const ExperimentConfig& cfg) {
    validate(cfg);
    const PrecisionContext ctx = make_context(cfg);
    detail::Stopwatch clock;
    const KernelSpec kernel = make_kernel(cfg, ctx);
    const PowerLaw law = as_power_law(kernel);  // VariantUnsupported for the OU kernel
    const long k_min = cfg.k_min.value_or(2);
    const long k_max = cfg.k_max.value_or(50);

    RunReport run{"spectral", detail::header("spectral", cfg, ctx), {}, Json::object(), 0};
    Json law_json = Json::object();
    law_json["a"] = decimal(law.a, ctx);
    law_json["b"] = decimal(law.b, ctx);
    law_json["c0"] = decimal(law.c0, ctx);
    law_json["log_c0"] = decimal(log(law.c0), ctx);
    run.report["spectral_density"] = law_json;

    CsvTable table({"K", "s_star", "T_star", "F", "F_over_K", "numeric_T_star", "numeric_F"});
    Json rows = Json::array();
    std::vector<Real> f_values;
    std::vector<Real> f_over_k;
    Real worst = ctx.zero();
    for (long k = k_min; k <= k_max; ++k) {
        LegendreProfile p = f_profile(kernel, k, ctx);
        const Real& f = *p.f_value;
        Real fk = f / k;
        worst = max(worst, relative_difference(f, *p.numeric_f_value));
        table.add({std::to_string(k), decimal(p.s_star, ctx), decimal(p.t_star_value, ctx), decimal(f, ctx),
                   decimal(fk, ctx), decimal(p.numeric_t_star, ctx), decimal(*p.numeric_f_value, ctx)});
        Json row = Json::object();
        row["K"] = k;
        row["s_star"] = decimal(p.s_star, ctx);
        row["T_star"] = decimal(p.t_star_value, ctx);
        row["F"] = decimal(f, ctx);
        row["F_over_K"] = decimal(fk, ctx);
        row["numeric_T_star"] = decimal(p.numeric_t_star, ctx);
        row["numeric_F"] = decimal(*p.numeric_f_value, ctx);
        rows.push_back(row);
        f_values.push_back(f);
        f_over_k.push_back(std::move(fk));
    }
    // First K from which the sequence decreases strictly through k_max.
    auto tail_start = [&](const std::vector<Real>& v) -> Json {
        if (v.empty()) return nullptr;
        std::size_t i = v.size() - 1;
        while (i > 0 && v[i] < v[i - 1]) --i;
        return k_min + static_cast<long>(i);
    };
    run.report["rows"] = rows;
    run.report["F_decreasing_from"] = tail_start(f_values);
    run.report["F_over_K_decreasing_from"] = tail_start(f_over_k);
    run.report["worst_closed_vs_numeric_relative_difference"] = worst.to_decimal(6);
    run.table_csv = table.str();
    run.timings["total_seconds"] = clock.seconds();
    return run;
}

inline RunReport cmd_contrast(const ExperimentConfig& cfg) {
    validate(cfg);
    const PrecisionContext ctx = make_context(cfg);
    detail::Stopwatch clock;
    TrajectoryResult result = detail::run_from_config(cfg, ctx);
    std::vector<Real> pts = result.points();
    std::vector<Real> gaps = coverage_by_k(pts, ctx);

    RunReport run{"contrast", detail::header("contrast", cfg, ctx), {}, Json::object(), 0};
    run.report["coverage_metric"] = "largest gap between consecutive sorted trajectory points, domain ends excluded";
    CsvTable table({"K", "x_K", "max_gap"});
    Json rows = Json::array();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        table.add({std::to_string(i + 1), decimal(pts[i], ctx), decimal(gaps[i], ctx)});
        Json row = Json::object();
        row["K"] = i + 1;
        row["x"] = decimal(pts[i], ctx);
        row["max_gap"] = decimal(gaps[i], ctx);
        rows.push_back(row);
    }
    run.report["coverage"] = rows;
    run.report["abort"] = detail::abort_json(result.abort);
    const long reference_k = 10;
    const long compare_k = std::min<long>(30, static_cast<long>(pts.size()));
    Json cmp = Json::object();
    cmp["reference_K"] = reference_k;
    cmp["compare_K"] = compare_k;
    if (static_cast<long>(pts.size()) >= reference_k && compare_k > reference_k) {
        const Real& g_ref = gaps[static_cast<std::size_t>(reference_k - 1)];
        const Real& g_cmp = gaps[static_cast<std::size_t>(compare_k - 1)];
        cmp["gap_at_reference"] = decimal(g_ref, ctx);
        cmp["gap_at_compare"] = decimal(g_cmp, ctx);
        cmp["gap_shrinks"] = g_cmp < g_ref;
    } else {
        cmp["gap_shrinks"] = nullptr;
    }
    run.report["comparison"] = cmp;
    run.table_csv = table.str();
    run.timings["total_seconds"] = clock.seconds();
    return run;
}

}  // namespace eilab::lab
