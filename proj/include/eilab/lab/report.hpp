#pragma once

// Run reports: a structured JSON document whose numbers are decimal strings at
// the working precision, a flat CSV table, and a separate timings document so
// that the report itself is byte-identical across re-runs.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "eilab/error.hpp"
#include "eilab/lab/config.hpp"
#include "eilab/real.hpp"
#include "eilab/theory.hpp"

namespace eilab::lab {

using Json = nlohmann::ordered_json;

struct RunReport {
    std::string command;
    Json report = Json::object();
    std::string table_csv;
    Json timings = Json::object();
    int exit_code = 0;
};

inline std::string decimal(const Real& x, const PrecisionContext& ctx) { return x.to_decimal(ctx.digits()); }

inline Json config_json(const ExperimentConfig& c) {
    Json j = Json::object();
    j["kernel"] = c.kernel;
    j["kernel.a"] = c.kernel_a;
    j["kernel.b"] = c.kernel_b;
    j["kernel.c0"] = c.kernel_c0;
    j["kernel.theta"] = c.kernel_theta;
    j["kernel.gamma"] = c.kernel_gamma;
    j["objective"] = c.objective;
    j["x1"] = c.x1;
    j["steps"] = c.steps;
    j["grid.epsilon"] = c.grid_epsilon;
    j["grid.l_max"] = c.grid_l_max;
    j["grid.extra_points"] = c.grid_extra_points;
    j["digits"] = c.digits;
    j["guard_digits"] = c.guard_digits;
    j["seed"] = c.seed;
    j["jitter"] = c.jitter;
    if (c.k_min) j["k_min"] = *c.k_min;
    if (c.k_max) j["k_max"] = *c.k_max;
    return j;
}

inline Json to_json(const BoundReport& r, const PrecisionContext& ctx) {
    Json j = Json::object();
    j["label"] = r.label;
    j["K"] = r.k;
    j["lhs"] = decimal(r.lhs, ctx);
    j["rhs"] = decimal(r.rhs, ctx);
    j["ratio"] = decimal(r.ratio, ctx);
    j["satisfied"] = r.satisfied;
    Json c = Json::object();
    for (const auto& [k, v] : r.context) c[k] = v;
    j["context"] = c;
    return j;
}

/// Comma-separated table with a header row and LF line endings.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<std::string> row) {
        if (row.size() != header_.size()) fail(ErrorKind::DimensionMismatch, "CSV row width does not match header");
        rows_.push_back(std::move(row));
    }

    [[nodiscard]] std::string str() const {
        std::string out;
        auto emit = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) out += ',';
                out += r[i];
            }
            out += '\n';
        };
        emit(header_);
        for (const auto& r : rows_) emit(r);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline std::string bound_table(const std::vector<BoundReport>& reports, const PrecisionContext& ctx) {
    CsvTable t({"label", "K", "lhs", "rhs", "ratio", "satisfied"});
    for (const auto& r : reports) {
        t.add({r.label, std::to_string(r.k), decimal(r.lhs, ctx), decimal(r.rhs, ctx), decimal(r.ratio, ctx),
               r.satisfied ? "true" : "false"});
    }
    return t.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::InvalidArgument, "cannot write '" + path.string() + "'");
    out << text;
}

/// Writes report.json, table.csv and timings.json into `dir`, creating it if needed.
inline void write_outputs(const RunReport& run, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text(dir / "report.json", run.report.dump(2) + "\n");
    write_text(dir / "table.csv", run.table_csv);
    write_text(dir / "timings.json", run.timings.dump(2) + "\n");
}

}  // namespace eilab::lab
