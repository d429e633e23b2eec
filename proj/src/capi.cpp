#include "qosshare/qosshare.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "qosshare/scenario.hpp"

struct qs_scenario {
    qosshare::Scenario sc;
};

namespace {

thread_local std::string last_error;

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <class F>
int guarded(F&& f) {
    try {
        last_error.clear();
        return f();
    } catch (const qosshare::Error& e) {
        last_error = e.what();
        return qosshare::exit_code(e.code());
    } catch (const std::exception& e) {
        last_error = e.what();
        return QS_ERUNTIME;
    } catch (...) {
        last_error = "unknown error";
        return QS_ERUNTIME;
    }
}

int null_arg(const char* what) {
    last_error = std::string(what) + " must not be NULL";
    return QS_EVALIDATION;
}

}  // namespace

extern "C" {

const char* qs_version(void) { return "0.1.0"; }

const char* qs_last_error(void) { return last_error.c_str(); }

void qs_string_free(char* s) { std::free(s); }

int qs_scenario_load(const char* path, qs_scenario** out) {
    if (!path || !out) return null_arg("path and out");
    return guarded([&] {
        *out = new qs_scenario{qosshare::load_scenario(path)};
        return QS_OK;
    });
}

int qs_scenario_parse(const char* json_text, qs_scenario** out) {
    if (!json_text || !out) return null_arg("json_text and out");
    return guarded([&] {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(json_text);
        } catch (const nlohmann::json::parse_error& e) {
            throw qosshare::SchemaError(std::vector<qosshare::SchemaIssue>{{"", std::string("not valid JSON: ") + e.what()}});
        }
        *out = new qs_scenario{qosshare::parse_scenario(doc)};
        return QS_OK;
    });
}

void qs_scenario_free(qs_scenario* sc) { delete sc; }

int qs_scenario_name(const qs_scenario* sc, char** out) {
    if (!sc || !out) return null_arg("scenario and out");
    return guarded([&] {
        *out = dup(sc->sc.name);
        return QS_OK;
    });
}

int qs_validate(const qs_scenario* sc, char** report_json, char** report_text) {
    if (!sc) return null_arg("scenario");
    return guarded([&] {
        const nlohmann::json rep = qosshare::validate_report(sc->sc);
        if (report_json) *report_json = dup(rep.dump(2));
        if (report_text) *report_text = dup(qosshare::validate_text(rep));
        if (!rep["feasible"].get<bool>()) {
            last_error = "infeasible linearized domain";
            return QS_EINFEASIBLE;
        }
        return QS_OK;
    });
}

int qs_bounds(const qs_scenario* sc, char** report_json) {
    if (!sc || !report_json) return null_arg("scenario and report_json");
    return guarded([&] {
        const nlohmann::json rep = qosshare::bounds_report(sc->sc);
        *report_json = dup(rep.dump(2));
        if (!rep["feasible"].get<bool>()) {
            last_error = "infeasible linearized domain";
            return QS_EINFEASIBLE;
        }
        return QS_OK;
    });
}

int qs_run(const qs_scenario* sc, const char* out_dir, const uint64_t* seeds, size_t n_seeds, int jobs,
           int debug_slack) {
    if (!sc || !out_dir) return null_arg("scenario and out_dir");
    if (seeds && n_seeds == 0) return null_arg("n_seeds > 0 with seeds, or seeds");
    return guarded([&] {
        std::vector<std::uint64_t> s = seeds ? std::vector<std::uint64_t>(seeds, seeds + n_seeds)
                                             : std::vector<std::uint64_t>{sc->sc.run.seed};
        qosshare::run_all(sc->sc, out_dir, s, jobs, debug_slack != 0);
        return QS_OK;
    });
}

int qs_compare(const char* a, const char* b, char** csv) {
    if (!a || !b || !csv) return null_arg("a, b and csv");
    return guarded([&] {
        std::ostringstream os;
        qosshare::compare_runs(a, b, os);
        *csv = dup(os.str());
        return QS_OK;
    });
}

int qs_export_polyhedron(const qs_scenario* sc, char** text) {
    if (!sc || !text) return null_arg("scenario and text");
    return guarded([&] {
        std::ostringstream os;
        qosshare::export_polyhedron(sc->sc, os);
        *text = dup(os.str());
        return QS_OK;
    });
}

}  // extern "C"
