#pragma once

// Scenario documents (JSON, schema_version 1), the validate/bounds reports
// and the on-disk run layout: <out>/<scenario>/<policy>/{frames.csv,
// summary.json, config-echo.json}.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qosshare/error.hpp"
#include "qosshare/policy.hpp"
#include "qosshare/sim.hpp"

namespace qosshare {

inline constexpr int kSchemaVersion = 1;

struct SchemaIssue {
    std::string path;  // JSON pointer, e.g. /qos/requirements/2/gamma
    std::string message;
};

/// Thrown by parse_scenario; what() lists every issue, one per line.
class SchemaError : public Error {
public:
    explicit SchemaError(std::vector<SchemaIssue> issues);
    const std::vector<SchemaIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<SchemaIssue> issues_;
};

struct Scenario {
    std::string name;
    Instance instance;
    std::vector<PolicyConfig> policies;
    RunConfig run;
    PriorMode mode = PriorMode::FrameConstant;
    std::map<PairId, double> w_star;  // frames
    nlohmann::json document;          // as parsed, for config-echo
};

Scenario parse_scenario(const nlohmann::json& doc, const std::string& fallback_name = "scenario");
Scenario load_scenario(const std::filesystem::path& path);

/// Condition (20), linearized-domain feasibility and the Slater margin.
/// Never throws Infeasible; the report carries "feasible": false instead.
nlohmann::json validate_report(const Scenario& sc);
std::string validate_text(const nlohmann::json& report);

/// Guarantees (Eq. 15, 20, 22, 26, 27, 28) and the Slater constants; "slater"
/// is null and "feasible" false when the linearized domain is empty.
nlohmann::json bounds_report(const Scenario& sc);

/// One (policy, seed) cell.
RunResult run_cell(const Scenario& sc, std::size_t policy, std::uint64_t seed, bool debug_slack);

void write_frames_csv(std::ostream& out, const Scenario& sc, const RunResult& r);
nlohmann::json summary_json(const Scenario& sc, const RunResult& r);
void write_cell(const std::filesystem::path& dir, const Scenario& sc, const RunResult& r);

/// Directory for a cell; seeds get their own level when more than one is run.
std::filesystem::path cell_dir(const std::filesystem::path& out, const Scenario& sc,
                               std::size_t policy, std::optional<std::uint64_t> seed);

/// Runs every (policy, seed) cell, `jobs` at a time, and writes the outputs.
void run_all(const Scenario& sc, const std::filesystem::path& out, const std::vector<std::uint64_t>& seeds,
             int jobs, bool debug_slack);

/// Joins two frames.csv files on (frame, client, class) into a paired table.
void compare_runs(const std::filesystem::path& a, const std::filesystem::path& b, std::ostream& out);

void export_polyhedron(const Scenario& sc, std::ostream& out);

/// 2 for schema/validation errors, 3 for infeasible QoS, 4 otherwise.
int exit_code(ErrorCode code);

}  // namespace qosshare
