#pragma once

// Experiment configuration: a flat "key = value" text format. Numeric values
// stay decimal strings end to end, so a 300-digit parameter survives any number
// of parse/serialize round trips.
//
//     # collapse run
//     kernel = gaussian
//     kernel.a = 0.25
//     kernel.gamma = unit
//     steps = 9

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "eilab/error.hpp"
#include "eilab/expected_improvement.hpp"
#include "eilab/kernel.hpp"
#include "eilab/real.hpp"

namespace eilab::lab {

struct ExperimentConfig {
    std::string kernel = "gaussian";  // gaussian | spectral_power | ornstein_uhlenbeck
    std::string kernel_a = "0.25";
    std::string kernel_b = "2";
    std::string kernel_c0 = "1";
    std::string kernel_theta = "1";
    std::string kernel_gamma = "unit";  // positive decimal, or "unit" for G(0) = 1
    std::string objective = "neg_kernel";
    std::string x1 = "0";
    long steps = 9;
    std::string grid_epsilon = "0.02";
    long grid_l_max = 10000;
    std::vector<std::string> grid_extra_points;
    int digits = 300;
    int guard_digits = 20;
    unsigned long seed = 42;
    std::string out = "eilab-out";
    bool jitter = false;
    std::optional<long> k_min;
    std::optional<long> k_max;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] inline void config_error(long line, const std::string& key, const std::string& what) {
    std::string where = line > 0 ? "line " + std::to_string(line) + ": " : "";
    if (!key.empty()) where += "field '" + key + "': ";
    fail(ErrorKind::ConfigError, where + what);
}

template <class Int>
Int parse_integer(const std::string& value, long line, const std::string& key) {
    Int out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) config_error(line, key, "expected an integer, got '" + value + "'");
    return out;
}

inline std::string parse_decimal(const std::string& value, long line, const std::string& key) {
    try {
        (void)Real::parse(value, 64);
    } catch (const LabError&) {
        config_error(line, key, "expected a decimal number, got '" + value + "'");
    }
    return value;
}

inline bool parse_bool(const std::string& value, long line, const std::string& key) {
    if (value == "true") return true;
    if (value == "false") return false;
    config_error(line, key, "expected true or false, got '" + value + "'");
}

inline std::vector<std::string> split_list(const std::string& value, long line, const std::string& key) {
    std::vector<std::string> out;
    if (trim(value).empty()) return out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_decimal(trim(item), line, key));
    return out;
}

}  // namespace detail

/// Validates cross-field constraints; field-level syntax is checked while parsing.
inline void validate(const ExperimentConfig& c) {
    using detail::config_error;
    if (c.kernel != "gaussian" && c.kernel != "spectral_power" && c.kernel != "ornstein_uhlenbeck") {
        config_error(0, "kernel", "unknown kernel '" + c.kernel + "'");
    }
    if (c.objective != "neg_kernel" && c.objective != "neg_gaussian") {
        config_error(0, "objective", "unknown objective '" + c.objective + "'");
    }
    if (c.steps < 1) config_error(0, "steps", "must be at least 1");
    if (c.grid_l_max < 0) config_error(0, "grid.l_max", "must be non-negative");
    if (c.digits < PrecisionContext::kMinDigits) config_error(0, "digits", "must be at least 50");
    if (c.guard_digits <= 0 || 2 * c.guard_digits >= c.digits) config_error(0, "guard_digits", "must lie in (0, digits/2)");
    if (c.k_min && *c.k_min < 2) config_error(0, "k_min", "must be at least 2");
    if (c.k_min && c.k_max && *c.k_max < *c.k_min) config_error(0, "k_max", "must not be below k_min");
    if (c.kernel_gamma != "unit") detail::parse_decimal(c.kernel_gamma, 0, "kernel.gamma");
}

inline ExperimentConfig parse_config(std::string_view text) {
    using namespace detail;
    ExperimentConfig c;
    std::map<std::string, long> seen;
    std::stringstream in{std::string(text)};
    std::string raw;
    long line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) config_error(line_no, "", "expected 'key = value', got '" + line + "'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) config_error(line_no, "", "missing key");
        if (auto it = seen.find(key); it != seen.end()) {
            config_error(line_no, key, "already set on line " + std::to_string(it->second));
        }
        seen[key] = line_no;

        if (key == "kernel") c.kernel = value;
        else if (key == "kernel.a") c.kernel_a = parse_decimal(value, line_no, key);
        else if (key == "kernel.b") c.kernel_b = parse_decimal(value, line_no, key);
        else if (key == "kernel.c0") c.kernel_c0 = parse_decimal(value, line_no, key);
        else if (key == "kernel.theta") c.kernel_theta = parse_decimal(value, line_no, key);
        else if (key == "kernel.gamma") c.kernel_gamma = value == "unit" ? value : parse_decimal(value, line_no, key);
        else if (key == "objective") c.objective = value;
        else if (key == "x1") c.x1 = parse_decimal(value, line_no, key);
        else if (key == "steps") c.steps = parse_integer<long>(value, line_no, key);
        else if (key == "grid.epsilon") c.grid_epsilon = parse_decimal(value, line_no, key);
        else if (key == "grid.l_max") c.grid_l_max = parse_integer<long>(value, line_no, key);
        else if (key == "grid.extra_points") c.grid_extra_points = split_list(value, line_no, key);
        else if (key == "digits") c.digits = parse_integer<int>(value, line_no, key);
        else if (key == "guard_digits") c.guard_digits = parse_integer<int>(value, line_no, key);
        else if (key == "seed") c.seed = parse_integer<unsigned long>(value, line_no, key);
        else if (key == "out") c.out = value;
        else if (key == "jitter") c.jitter = parse_bool(value, line_no, key);
        else if (key == "k_min") c.k_min = parse_integer<long>(value, line_no, key);
        else if (key == "k_max") c.k_max = parse_integer<long>(value, line_no, key);
        else config_error(line_no, key, "unknown key");
    }
    validate(c);
    return c;
}

inline std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "kernel = " << c.kernel << '\n'
       << "kernel.a = " << c.kernel_a << '\n'
       << "kernel.b = " << c.kernel_b << '\n'
       << "kernel.c0 = " << c.kernel_c0 << '\n'
       << "kernel.theta = " << c.kernel_theta << '\n'
       << "kernel.gamma = " << c.kernel_gamma << '\n'
       << "objective = " << c.objective << '\n'
       << "x1 = " << c.x1 << '\n'
       << "steps = " << c.steps << '\n'
       << "grid.epsilon = " << c.grid_epsilon << '\n'
       << "grid.l_max = " << c.grid_l_max << '\n';
    if (!c.grid_extra_points.empty()) {
        os << "grid.extra_points = ";
        for (std::size_t i = 0; i < c.grid_extra_points.size(); ++i) os << (i ? ", " : "") << c.grid_extra_points[i];
        os << '\n';
    }
    os << "digits = " << c.digits << '\n'
       << "guard_digits = " << c.guard_digits << '\n'
       << "seed = " << c.seed << '\n'
       << "out = " << c.out << '\n'
       << "jitter = " << (c.jitter ? "true" : "false") << '\n';
    if (c.k_min) os << "k_min = " << *c.k_min << '\n';
    if (c.k_max) os << "k_max = " << *c.k_max << '\n';
    return os.str();
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::ConfigError, "cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const LabError& e) {
        fail(ErrorKind::ConfigError, path + ": " + std::string(e.what()).substr(sizeof("ConfigError: ") - 1));
    }
}

/// EILAB_DIGITS and EILAB_OUT override the file; explicit command-line values override both.
inline void apply_environment(ExperimentConfig& c) {
    if (const char* d = std::getenv("EILAB_DIGITS"); d && *d) {
        c.digits = detail::parse_integer<int>(d, 0, "EILAB_DIGITS");
    }
    if (const char* o = std::getenv("EILAB_OUT"); o && *o) c.out = o;
    validate(c);
}

inline PrecisionContext make_context(const ExperimentConfig& c) { return PrecisionContext(c.digits, c.guard_digits); }

inline KernelSpec make_kernel(const ExperimentConfig& c, const PrecisionContext& ctx) {
    KernelScale scale = UnitVariance{};
    if (c.kernel_gamma != "unit") scale = ctx.parse(c.kernel_gamma);
    if (c.kernel == "gaussian") return KernelSpec::gaussian(ctx.parse(c.kernel_a), scale, ctx);
    if (c.kernel == "spectral_power") {
        return KernelSpec::spectral_power(ctx.parse(c.kernel_a), ctx.parse(c.kernel_b), ctx.parse(c.kernel_c0), scale,
                                          ctx);
    }
    if (c.kernel == "ornstein_uhlenbeck") return KernelSpec::ornstein_uhlenbeck(ctx.parse(c.kernel_theta), scale, ctx);
    fail(ErrorKind::ConfigError, "unknown kernel '" + c.kernel + "'");
}

inline CandidateGrid make_grid(const ExperimentConfig& c, const PrecisionContext& ctx) {
    CandidateGrid g{ctx.parse(c.grid_epsilon), c.grid_l_max, {}};
    for (const auto& e : c.grid_extra_points) g.extra_points.push_back(ctx.parse(e));
    return g;
}

}  // namespace eilab::lab
