#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "eilab/lab/commands.hpp"

using namespace eilab;
using namespace eilab::lab;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const LabError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no LabError thrown";
    return ErrorKind::InvalidArgument;
}

ExperimentConfig quick_config() {
    ExperimentConfig c;
    c.digits = 80;
    c.guard_digits = 10;
    c.steps = 3;
    c.grid_l_max = 200;
    return c;
}

struct EnvGuard {
    explicit EnvGuard(const char* name) : name_(name) {}
    ~EnvGuard() { unsetenv(name_); }
    const char* name_;
};

}  // namespace

TEST(Config, DefaultsMatchCollapseRun) {
    ExperimentConfig c;
    EXPECT_EQ(c.kernel, "gaussian");
    EXPECT_EQ(c.kernel_a, "0.25");
    EXPECT_EQ(c.kernel_gamma, "unit");
    EXPECT_EQ(c.objective, "neg_kernel");
    EXPECT_EQ(c.x1, "0");
    EXPECT_EQ(c.steps, 9);
    EXPECT_EQ(c.grid_epsilon, "0.02");
    EXPECT_EQ(c.grid_l_max, 10000);
    EXPECT_EQ(c.digits, 300);
}

TEST(Config, RandomRoundTrip) {
    std::mt19937_64 rng(99);
    auto pick = [&](std::initializer_list<const char*> opts) {
        std::vector<const char*> v(opts);
        return std::string(v[rng() % v.size()]);
    };
    auto dec = [&] {
        std::uniform_real_distribution<double> u(0.01, 5.0);
        std::ostringstream os;
        os.precision(17);
        os << u(rng);
        return os.str();
    };
    for (int i = 0; i < 50; ++i) {
        ExperimentConfig c;
        c.kernel = pick({"gaussian", "spectral_power", "ornstein_uhlenbeck"});
        c.kernel_a = dec();
        c.kernel_b = pick({"1.5", "2", "3.25"});
        c.kernel_c0 = dec();
        c.kernel_theta = dec();
        c.kernel_gamma = rng() % 2 ? "unit" : dec();
        c.objective = pick({"neg_kernel", "neg_gaussian"});
        c.x1 = pick({"0", "-0.5", "0.125", "1e-3"});
        c.steps = 1 + static_cast<long>(rng() % 40);
        c.grid_epsilon = dec();
        c.grid_l_max = static_cast<long>(rng() % 20000);
        if (rng() % 2) c.grid_extra_points = {"0.5", "-1e-7"};
        c.digits = 50 + static_cast<int>(rng() % 400);
        c.guard_digits = 1 + static_cast<int>(rng() % 20);
        c.seed = rng();
        c.out = "out/run" + std::to_string(i);
        c.jitter = rng() % 2;
        if (rng() % 2) {
            c.k_min = 2 + static_cast<long>(rng() % 5);
            c.k_max = *c.k_min + static_cast<long>(rng() % 30);
        }
        const std::string text = serialize_config(c);
        EXPECT_EQ(parse_config(text), c) << text;
        EXPECT_EQ(serialize_config(parse_config(text)), text);
    }
}

TEST(Config, ErrorsNameLineAndField) {
    try {
        (void)parse_config("kernel = gaussian\nkernel.q = 3\n");
        FAIL();
    } catch (const LabError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("kernel.q"), std::string::npos) << e.what();
    }
    try {
        (void)parse_config("# c\n\nsteps = many\n");
        FAIL();
    } catch (const LabError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    EXPECT_EQ(kind_of([] { (void)parse_config("steps = 3\nsteps = 4\n"); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { (void)parse_config("kernel.a = abc\n"); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { (void)parse_config("no equals sign\n"); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { (void)parse_config("kernel = matern\n"); }), ErrorKind::ConfigError);
}

TEST(Config, ZeroStepsRejected) {
    EXPECT_EQ(kind_of([] { (void)parse_config("steps = 0\n"); }), ErrorKind::ConfigError);
    ExperimentConfig c;
    c.steps = 0;
    EXPECT_EQ(kind_of([&] { (void)cmd_trajectory(c); }), ErrorKind::ConfigError);
}

TEST(Config, EnvironmentOverridesFile) {
    EnvGuard d("EILAB_DIGITS");
    EnvGuard o("EILAB_OUT");
    setenv("EILAB_DIGITS", "120", 1);
    setenv("EILAB_OUT", "elsewhere", 1);
    ExperimentConfig c = parse_config("digits = 300\nout = here\n");
    apply_environment(c);
    EXPECT_EQ(c.digits, 120);
    EXPECT_EQ(c.out, "elsewhere");
    setenv("EILAB_DIGITS", "lots", 1);
    EXPECT_EQ(kind_of([&] { apply_environment(c); }), ErrorKind::ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
    for (const auto& entry : fs::directory_iterator(fs::path(EILAB_SOURCE_DIR) / "configs")) {
        EXPECT_NO_THROW((void)load_config(entry.path().string())) << entry.path();
    }
    ExperimentConfig t = load_config((fs::path(EILAB_SOURCE_DIR) / "configs" / "collapse.conf").string());
    ExperimentConfig d;
    t.out = d.out;
    EXPECT_EQ(t, d);
}

TEST(Report, TrajectoryIsByteIdenticalAcrossRuns) {
    const ExperimentConfig c = quick_config();
    RunReport a = cmd_trajectory(c);
    RunReport b = cmd_trajectory(c);
    EXPECT_EQ(a.report.dump(2), b.report.dump(2));
    EXPECT_EQ(a.table_csv, b.table_csv);

    const fs::path dir = fs::temp_directory_path() / "eilab_test_report";
    fs::remove_all(dir);
    write_outputs(a, dir);
    const std::string first = slurp(dir / "report.json");
    write_outputs(b, dir);
    EXPECT_EQ(slurp(dir / "report.json"), first);
    EXPECT_TRUE(fs::exists(dir / "timings.json"));
    fs::remove_all(dir);
}

TEST(Report, NumbersAreDecimalStrings) {
    RunReport r = cmd_trajectory(quick_config());
    const Json& it = r.report["iterations"][0];
    ASSERT_TRUE(it["x"].is_string());
    ASSERT_TRUE(it["ei"].is_string());
    // Full working precision: 80 significant digits in the mantissa.
    const std::string x = it["x"].get<std::string>();
    const auto e = x.find('e');
    std::string mant = x.substr(0, e);
    mant.erase(std::remove_if(mant.begin(), mant.end(), [](char ch) { return ch == '-' || ch == '.'; }), mant.end());
    EXPECT_EQ(mant.size(), 80u) << x;
    EXPECT_EQ(r.report.find("total_seconds"), r.report.end());
}

TEST(Report, CsvHasHeaderAndLineFeeds) {
    RunReport r = cmd_trajectory(quick_config());
    const std::string& csv = r.table_csv;
    EXPECT_EQ(csv.rfind("K,x_K,abs_x_K,I_prev\n", 0), 0u);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    EXPECT_EQ(csv.back(), '\n');
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 1 + quick_config().steps);
    EXPECT_THROW(CsvTable({"a", "b"}).add({"1"}), LabError);
}

TEST(Commands, UnknownSuite) {
    EXPECT_EQ(kind_of([] { (void)cmd_verify(quick_config(), "thm9"); }), ErrorKind::UnknownSuite);
}

TEST(Commands, SpectralRejectsRoughKernel) {
    ExperimentConfig c = quick_config();
    c.kernel = "ornstein_uhlenbeck";
    EXPECT_EQ(kind_of([&] { (void)cmd_spectral(c); }), ErrorKind::VariantUnsupported);
}

TEST(Commands, SpectralReportsMonotoneProfile) {
    ExperimentConfig c = quick_config();
    c.kernel = "spectral_power";
    c.kernel_a = "1";
    c.kernel_gamma = "1";
    c.k_min = 2;
    c.k_max = 12;
    RunReport r = cmd_spectral(c);
    EXPECT_EQ(r.report["rows"].size(), 11u);
    EXPECT_EQ(r.report["F_decreasing_from"].get<long>(), 2);
    EXPECT_EQ(r.report["F_over_K_decreasing_from"].get<long>(), 2);
}

TEST(Commands, VerifyExitStatus) {
    RunReport r = cmd_verify(quick_config(), "lemma3-tails");
    EXPECT_TRUE(r.report["passed"].get<bool>());
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_TRUE(is_hard_suite("ei-oracle"));
    EXPECT_FALSE(is_hard_suite("thm3-bounds"));
}

TEST(Commands, ContrastWithoutEnoughSteps) {
    RunReport r = cmd_contrast(quick_config());
    EXPECT_EQ(r.report["coverage"].size(), 4u);
    EXPECT_TRUE(r.report["comparison"]["gap_shrinks"].is_null());
}
