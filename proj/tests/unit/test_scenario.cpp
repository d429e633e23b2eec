#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qosshare/scenario.hpp"

using namespace qosshare;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_doc() {
    return json::parse(R"({
      "schema_version": 1,
      "name": "small",
      "topology": {"inps": 2, "clients": 2, "classes": 2, "inp_success_prob": [0.9, 0.8], "rate_cap": 1},
      "qos": {"frame_slots": 6, "requirements": [{"client": 0, "class": 0, "gamma": 0.1, "q": 0.5, "w_star": 50}]},
      "arrivals": {"a_max": 20, "flows": [
        {"client": 0, "class": 0, "kind": "poisson", "rate": 1.0},
        {"client": 1, "class": 1, "kind": "pareto", "rate": 1.5, "shape": 2.5}]},
      "utility": {"kind": "alpha_fair", "weights": [1.0, 0.5], "alphas": [0.5, 0.75]},
      "policies": [{"name": "mdp", "kind": "mdp", "v": 2.0}, {"name": "dp", "kind": "dp_noqos", "v": 2.0}],
      "run": {"horizon": 30, "seed": 4, "prior_mode": "frame_constant"}
    })");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool has_issue(const SchemaError& e, const std::string& path) {
    for (const auto& i : e.issues())
        if (i.path == path) return true;
    return false;
}

fs::path temp_dir(const std::string& tag) {
    const fs::path d = fs::temp_directory_path() / ("qosshare-test-" + tag);
    fs::remove_all(d);
    return d;
}

}  // namespace

TEST_CASE("parse a well-formed scenario") {
    const Scenario sc = parse_scenario(small_doc());
    CHECK(sc.name == "small");
    CHECK(sc.instance.topo.link_count() == 4);
    CHECK(sc.instance.spec.active(0));
    CHECK(sc.w_star.at(0) == 50.0);
    CHECK(sc.instance.arrivals.mean(3) == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(sc.policies.size() == 2);
    CHECK(sc.mode == PriorMode::FrameConstant);
}

TEST_CASE("schema errors are itemized with paths") {
    json d = small_doc();
    d.erase("utility");
    d["topology"].erase("inps");
    d["qos"]["requirements"][0]["gamma"] = 1.5;
    d["arrivals"]["flows"][0]["kind"] = "bursty";
    d["policies"][1]["name"] = "mdp";
    try {
        parse_scenario(d);
        FAIL("expected a schema error");
    } catch (const SchemaError& e) {
        CHECK(e.code() == ErrorCode::Validation);
        CHECK(has_issue(e, "/utility"));
        CHECK(has_issue(e, "/topology/inps"));
        CHECK(has_issue(e, "/qos/requirements/0/gamma"));
        CHECK(has_issue(e, "/arrivals/flows/0/kind"));
        CHECK(has_issue(e, "/policies/1/name"));
        CHECK(exit_code(e.code()) == 2);
    }
}

TEST_CASE("a requirement without an arrival flow is rejected") {
    json d = small_doc();
    d["qos"]["requirements"].push_back({{"client", 1}, {"class", 0}, {"gamma", 0.05}, {"q", 0.3}});
    CHECK_THROWS_AS(parse_scenario(d), SchemaError);
}

TEST_CASE("validate: feasible and infeasible specs") {
    const json ok = validate_report(parse_scenario(small_doc()));
    CHECK(ok["feasible"].get<bool>());
    CHECK(ok["slater"]["zeta"].get<double>() > 0.0);
    CHECK(validate_text(ok).find("\nfeasible, ") != std::string::npos);

    json d = small_doc();
    d["qos"]["requirements"] = json::array();
    for (int i = 0; i < 2; ++i)
        for (int c = 0; c < 2; ++c) d["qos"]["requirements"].push_back({{"client", i}, {"class", c}, {"gamma", 0.99}, {"q", 0.5}});
    d["arrivals"]["flows"] = json::array();
    for (int i = 0; i < 2; ++i)
        for (int c = 0; c < 2; ++c) d["arrivals"]["flows"].push_back({{"client", i}, {"class", c}, {"kind", "poisson"}, {"rate", 0.5}});
    const Scenario bad = parse_scenario(d);
    const json rep = validate_report(bad);
    CHECK(!rep["feasible"].get<bool>());
    CHECK(validate_text(rep).find("infeasible linearized domain") != std::string::npos);
    CHECK(!bounds_report(bad)["feasible"].get<bool>());
}

TEST_CASE("bounds report") {
    const json b = bounds_report(parse_scenario(small_doc()));
    CHECK(b["feasible"].get<bool>());
    const json& p = b["pairs"][0];
    CHECK(p["throughput"].get<double>() == doctest::Approx(2 * 6 * 0.1 * 0.5));
    CHECK(p["protection_level"].get<double>() == doctest::Approx(std::sqrt(2.0 * 12.0 * std::log(2.0))));
    CHECK(p["gamma_q_threshold"].is_number());
    CHECK(b["pairs"].size() == 2);  // pairs without flow or requirement are omitted
    CHECK(b["pairs"][1]["delay_bound"].is_null());
}

TEST_CASE("run outputs: schema, paired arrivals, determinism") {
    const Scenario sc = parse_scenario(small_doc());
    const fs::path d1 = temp_dir("a"), d2 = temp_dir("b");
    run_all(sc, d1, {4}, 2, true);
    run_all(sc, d2, {4}, 1, false);
    for (const char* pol : {"mdp", "dp"})
        for (const char* f : {"frames.csv", "summary.json", "config-echo.json"}) {
            const fs::path a = d1 / "small" / pol / f, b = d2 / "small" / pol / f;
            REQUIRE(fs::exists(a));
            if (std::string(f) == "summary.json") continue;  // carries min_slack under --debug-slack
            CHECK(slurp(a) == slurp(b));
        }

    std::ifstream in(d1 / "small" / "mdp" / "frames.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# scenario=small policy=mdp seed=4", 0) == 0);
    std::getline(in, line);
    CHECK(line == "frame,client,class,arrivals,service,backlog,delivery_ratio,qos_met,expected_service,utility");
    int rows = 0, utility_rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        if (line.find(",-1,-1,") != std::string::npos) ++utility_rows;
    }
    CHECK(rows == 30 * 5);
    CHECK(utility_rows == 30);

    std::ostringstream cmp;
    compare_runs(d1 / "small" / "mdp", d1 / "small" / "dp", cmp);
    std::istringstream ci(cmp.str());
    std::getline(ci, line);
    CHECK(line.rfind("frame,client,class,arrivals_a,arrivals_b,", 0) == 0);
    int n = 0;
    while (std::getline(ci, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) f.push_back(c);
        CHECK(f[3] == f[4]);  // shared arrival streams
        ++n;
    }
    CHECK(n == rows);

    const json s = json::parse(slurp(d1 / "small" / "mdp" / "summary.json"));
    for (const char* k : {"pairs", "time_avg_utility", "solver", "seed", "total_final_backlog"}) CHECK(s.contains(k));
    CHECK(s["pairs"][0].contains("reliability"));
    CHECK(s["pairs"][0].contains("mean_delay"));
    CHECK(s["min_slack"].get<double>() > -1e-6);

    run_all(sc, d2, {4, 5}, 1, false);
    CHECK(fs::exists(d2 / "small" / "seed-5" / "dp" / "frames.csv"));
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("polyhedron export") {
    std::ostringstream os;
    export_polyhedron(parse_scenario(small_doc()), os);
    CHECK(!os.str().empty());
}
