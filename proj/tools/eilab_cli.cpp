// eilab: command-line driver for the expected-improvement precision lab.
//
//   eilab trajectory [--config FILE] [--digits N] [--out DIR] [--seed N]
//   eilab verify SUITE [...]
//   eilab spectral [...]
//   eilab contrast [...]
//
// Settings resolve in the order built-in defaults, config file, EILAB_DIGITS /
// EILAB_OUT, command-line flags.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "eilab/lab/commands.hpp"

namespace {

using namespace eilab;
using namespace eilab::lab;

struct Flags {
    std::string config;
    std::optional<int> digits;
    std::optional<std::string> out;
    std::optional<unsigned long> seed;
};

ExperimentConfig resolve(const Flags& f) {
    ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    apply_environment(cfg);
    if (f.digits) cfg.digits = *f.digits;
    if (f.out) cfg.out = *f.out;
    if (f.seed) cfg.seed = *f.seed;
    validate(cfg);
    return cfg;
}

void print_summary(const RunReport& run, const std::string& out_dir) {
    const auto& r = run.report;
    if (run.command == "trajectory" || run.command == "contrast") {
        const auto& iters = run.command == "trajectory" ? r["iterations"] : r["coverage"];
        std::cout << run.command << ": " << iters.size() << " rows";
        if (!r["abort"].is_null()) {
            std::cout << ", aborted with " << r["abort"]["error"].get<std::string>() << " at K = "
                      << r["abort"]["failing_K"].get<long>();
        }
        if (run.command == "contrast" && !r["comparison"]["gap_shrinks"].is_null()) {
            std::cout << ", gap shrinks K=" << r["comparison"]["reference_K"].get<long>() << "->"
                      << r["comparison"]["compare_K"].get<long>() << ": "
                      << (r["comparison"]["gap_shrinks"].get<bool>() ? "yes" : "no");
        }
        std::cout << '\n';
    } else if (run.command == "verify") {
        std::cout << "verify " << r["suite"].get<std::string>() << ": " << (r["passed"].get<bool>() ? "PASS" : "FAIL")
                  << " (" << r["bounds"].size() << " checks, "
                  << (r["hard_assertions"].get<bool>() ? "hard assertions" : "empirical, report only") << ")\n";
    } else {
        std::cout << "spectral: " << r["rows"].size() << " rows\n";
    }
    std::cout << "wrote " << out_dir << "/report.json, table.csv, timings.json\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Arbitrary-precision lab for 1D expected improvement with Gaussian-process kernels"};
    app.require_subcommand(1);
    Flags flags;
    std::string suite;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "experiment config file (key = value)")->check(CLI::ExistingFile);
        sub->add_option("--digits", flags.digits, "decimal digits of working precision");
        sub->add_option("--out", flags.out, "output directory");
        sub->add_option("--seed", flags.seed, "seed for randomized suites");
    };

    CLI::App* traj = app.add_subcommand("trajectory", "run the EI optimization and tabulate x_K and I_{K-1}(x_K)");
    CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
    CLI::App* spectral = app.add_subcommand("spectral", "tabulate s*, T*, F(K) and F(K)/K");
    CLI::App* contrast = app.add_subcommand("contrast", "trajectory coverage (largest gap) per K");
    for (CLI::App* sub : {traj, verify, spectral, contrast}) add_common(sub);
    std::string suites_help = "one of:";
    for (auto n : suite_names()) suites_help += " " + std::string(n);
    verify->add_option("suite", suite, suites_help)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig cfg = resolve(flags);
        RunReport run;
        if (traj->parsed()) run = cmd_trajectory(cfg);
        else if (verify->parsed()) run = cmd_verify(cfg, suite);
        else if (spectral->parsed()) run = cmd_spectral(cfg);
        else run = cmd_contrast(cfg);
        write_outputs(run, cfg.out);
        print_summary(run, cfg.out);
        return run.exit_code;
    } catch (const LabError& e) {
        std::cerr << "eilab: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "eilab: " << e.what() << '\n';
        return 2;
    }
}
