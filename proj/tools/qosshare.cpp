// Command-line front end over the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qosshare/qosshare.h"

namespace {

struct Owned {
    char* p = nullptr;
    ~Owned() { qs_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

using ScenarioPtr = std::unique_ptr<qs_scenario, decltype(&qs_scenario_free)>;

int report(int rc) {
    if (rc != QS_OK) std::fprintf(stderr, "error: %s\n", qs_last_error());
    return rc;
}

int load(const std::string& path, ScenarioPtr& out) {
    qs_scenario* sc = nullptr;
    const int rc = qs_scenario_load(path.c_str(), &sc);
    if (rc != QS_OK) return report(rc);
    out.reset(sc);
    return QS_OK;
}

int emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return QS_OK;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) {
        std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
        return QS_ERUNTIME;
    }
    return QS_OK;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qosshare: QoS-aware infrastructure sharing simulator"};
    app.set_version_flag("--version", std::string(qs_version()));
    app.require_subcommand(1);

    std::string file, out, out_root = "out", run_a, run_b;
    std::vector<std::uint64_t> seeds;
    int jobs = 1;
    bool debug_slack = false, as_json = false;

    auto* validate = app.add_subcommand("validate", "Check a scenario: schema, condition (20), feasibility, Slater margin");
    validate->add_option("scenario", file, "Scenario file")->required()->check(CLI::ExistingFile);
    validate->add_flag("--json", as_json, "Print the JSON report instead of text");

    auto* bounds = app.add_subcommand("bounds", "Print throughput/delay bounds and constants as JSON");
    bounds->add_option("scenario", file, "Scenario file")->required()->check(CLI::ExistingFile);
    bounds->add_option("--out", out, "Write to this file instead of stdout");

    auto* run = app.add_subcommand("run", "Simulate every policy of a scenario");
    run->add_option("scenario", file, "Scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_root, "Output root")->capture_default_str();
    run->add_option("--seed", seeds, "Seed (repeatable); defaults to the scenario's");
    run->add_option("--jobs", jobs, "Cells run in parallel")->default_val(1)->check(CLI::PositiveNumber);
    run->add_flag("--debug-slack", debug_slack, "Check every MDP decision's QoS slack");

    auto* compare = app.add_subcommand("compare", "Paired per-frame diff of two runs (a - b)");
    compare->add_option("a", run_a, "Run directory or frames.csv")->required()->check(CLI::ExistingPath);
    compare->add_option("b", run_b, "Run directory or frames.csv")->required()->check(CLI::ExistingPath);
    compare->add_option("--out", out, "Write to this file instead of stdout");

    auto* poly = app.add_subcommand("export-polyhedron", "Dump the linearized domain as sparse triplets");
    poly->add_option("scenario", file, "Scenario file")->required()->check(CLI::ExistingFile);
    poly->add_option("--out", out, "Write to this file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : QS_EVALIDATION;
    }

    if (compare->parsed()) {
        Owned csv;
        const int rc = qs_compare(run_a.c_str(), run_b.c_str(), &csv.p);
        if (rc != QS_OK) return report(rc);
        return emit(csv.str(), out);
    }

    ScenarioPtr sc(nullptr, qs_scenario_free);
    if (const int rc = load(file, sc); rc != QS_OK) return rc;

    if (validate->parsed()) {
        Owned js, text;
        const int rc = qs_validate(sc.get(), &js.p, &text.p);
        if (rc != QS_OK && rc != QS_EINFEASIBLE) return report(rc);
        std::cout << (as_json ? js.str() + "\n" : text.str());
        return rc;
    }
    if (bounds->parsed()) {
        Owned js;
        const int rc = qs_bounds(sc.get(), &js.p);
        if (rc != QS_OK && rc != QS_EINFEASIBLE) return report(rc);
        if (const int wrc = emit(js.str(), out); wrc != QS_OK) return wrc;
        return report(rc);
    }
    if (poly->parsed()) {
        Owned text;
        const int rc = qs_export_polyhedron(sc.get(), &text.p);
        if (rc != QS_OK) return report(rc);
        return emit(text.str(), out);
    }
    // run
    Owned js;
    if (const int rc = qs_validate(sc.get(), nullptr, &js.p); rc != QS_OK) {
        std::cerr << js.str();
        return report(rc);
    }
    const int rc = qs_run(sc.get(), out_root.c_str(), seeds.empty() ? nullptr : seeds.data(), seeds.size(), jobs,
                          debug_slack ? 1 : 0);
    if (rc != QS_OK) return report(rc);
    Owned name;
    qs_scenario_name(sc.get(), &name.p);
    std::cout << "wrote " << out_root << "/" << name.str() << "\n";
    return QS_OK;
}
