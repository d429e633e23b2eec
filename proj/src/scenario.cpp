#include "qosshare/scenario.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "qosshare/analysis.hpp"
#include "qosshare/robust.hpp"

namespace qosshare {

using nlohmann::json;

namespace {

std::string join_issues(const std::vector<SchemaIssue>& issues) {
    std::string s = "scenario schema errors:";
    for (const auto& i : issues) s += "\n  " + (i.path.empty() ? std::string("/") : i.path) + ": " + i.message;
    return s;
}

// Collects schema issues instead of stopping at the first one.
class Reader {
public:
    std::vector<SchemaIssue> issues;

    void issue(const std::string& path, const std::string& msg) { issues.push_back({path, msg}); }

    const json* field(const json& obj, const std::string& path, const char* key, bool required) {
        if (!obj.is_object()) return nullptr;
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) {
            if (required) issue(path + "/" + key, "missing required field");
            return nullptr;
        }
        return &*it;
    }

    const json* object(const json& obj, const std::string& path, const char* key, bool required) {
        const json* j = field(obj, path, key, required);
        if (j && !j->is_object()) {
            issue(path + "/" + key, "expected an object");
            return nullptr;
        }
        return j;
    }

    const json* array(const json& obj, const std::string& path, const char* key, bool required) {
        const json* j = field(obj, path, key, required);
        if (j && !j->is_array()) {
            issue(path + "/" + key, "expected an array");
            return nullptr;
        }
        return j;
    }

    std::optional<double> number(const json& obj, const std::string& path, const char* key, bool required,
                                 double lo, double hi, bool lo_open = false, bool hi_open = false) {
        const json* j = field(obj, path, key, required);
        if (!j) return std::nullopt;
        const std::string p = path + "/" + key;
        if (!j->is_number()) {
            issue(p, "expected a number");
            return std::nullopt;
        }
        const double v = j->get<double>();
        const bool low_bad = lo_open ? !(v > lo) : !(v >= lo);
        const bool high_bad = hi_open ? !(v < hi) : !(v <= hi);
        if (!std::isfinite(v) || low_bad || high_bad) {
            issue(p, "value " + j->dump() + " outside " + (lo_open ? "(" : "[") + j_str(lo) + ", " + j_str(hi) +
                         (hi_open ? ")" : "]"));
            return std::nullopt;
        }
        return v;
    }

    std::optional<std::int64_t> integer(const json& obj, const std::string& path, const char* key, bool required,
                                        std::int64_t lo, std::int64_t hi) {
        const json* j = field(obj, path, key, required);
        if (!j) return std::nullopt;
        const std::string p = path + "/" + key;
        if (!j->is_number_integer()) {
            issue(p, "expected an integer");
            return std::nullopt;
        }
        const std::int64_t v = j->get<std::int64_t>();
        if (v < lo || v > hi) {
            issue(p, "value " + j->dump() + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return std::nullopt;
        }
        return v;
    }

    std::optional<std::string> string(const json& obj, const std::string& path, const char* key, bool required,
                                      std::initializer_list<const char*> allowed = {}) {
        const json* j = field(obj, path, key, required);
        if (!j) return std::nullopt;
        const std::string p = path + "/" + key;
        if (!j->is_string()) {
            issue(p, "expected a string");
            return std::nullopt;
        }
        std::string v = j->get<std::string>();
        if (allowed.size() == 0) return v;
        std::string opts;
        for (const char* a : allowed) {
            if (v == a) return v;
            opts += std::string(opts.empty() ? "" : ", ") + a;
        }
        issue(p, "unknown value \"" + v + "\" (expected one of " + opts + ")");
        return std::nullopt;
    }

private:
    static std::string j_str(double v) {
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        return json(v).dump();
    }
};

struct PairRef {
    int client = 0;
    int cls = 0;
};

std::optional<PairRef> pair_ref(Reader& rd, const json& obj, const std::string& path, int clients, int classes) {
    const auto c = rd.integer(obj, path, "client", true, 0, clients - 1);
    const auto k = rd.integer(obj, path, "class", true, 0, classes - 1);
    if (!c || !k) return std::nullopt;
    return PairRef{static_cast<int>(*c), static_cast<int>(*k)};
}

std::string fmt(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

bool valid_name(const std::string& s) {
    if (s.empty() || s == "." || s == "..") return false;
    for (char ch : s)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) return false;
    return true;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

SchemaError::SchemaError(std::vector<SchemaIssue> issues)
    : Error(ErrorCode::Validation, join_issues(issues)), issues_(std::move(issues)) {}

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::Validation:
        case ErrorCode::InvalidArgument:
            return 2;
        case ErrorCode::Infeasible:
            return 3;
        default:
            return 4;
    }
}

Scenario parse_scenario(const json& doc, const std::string& fallback_name) {
    Reader rd;
    if (!doc.is_object()) throw SchemaError(std::vector<SchemaIssue>{{"", "scenario must be a JSON object"}});

    if (auto v = rd.integer(doc, "", "schema_version", true, 0, 1 << 20); v && *v != kSchemaVersion)
        rd.issue("/schema_version", "unsupported version " + std::to_string(*v) + " (expected " +
                                        std::to_string(kSchemaVersion) + ")");
    std::string name = rd.string(doc, "", "name", false).value_or(fallback_name);
    if (!valid_name(name)) rd.issue("/name", "must be nonempty and use only letters, digits, '-', '_', '.'");
    if (auto u = rd.string(doc, "", "units", false); u && *u != "data units per frame")
        rd.issue("/units", "only \"data units per frame\" is supported");

    // topology
    std::optional<Topology> topo;
    int classes = 1 << 10;
    int clients = 1 << 16;
    if (const json* t = rd.object(doc, "", "topology", true)) {
        const std::string p = "/topology";
        const auto inps = rd.integer(*t, p, "inps", true, 1, 1 << 16);
        const auto cl = rd.integer(*t, p, "clients", true, 1, 1 << 16);
        const auto cs = rd.integer(*t, p, "classes", true, 1, 1 << 10);
        // bounds for range checks further down, even if the topology is unusable
        clients = cl ? static_cast<int>(*cl) : 1 << 16;
        classes = cs ? static_cast<int>(*cs) : 1 << 10;
        std::vector<double> caps;
        if (const json* rc = rd.field(*t, p, "rate_cap", true)) {
            if (rc->is_number()) {
                if (cl) caps.assign(static_cast<std::size_t>(*cl), rc->get<double>());
            } else if (rc->is_array()) {
                for (std::size_t i = 0; i < rc->size(); ++i) {
                    if (!(*rc)[i].is_number()) rd.issue(p + "/rate_cap/" + std::to_string(i), "expected a number");
                    else caps.push_back((*rc)[i].get<double>());
                }
                if (cl && caps.size() != static_cast<std::size_t>(*cl))
                    rd.issue(p + "/rate_cap", "expected one entry per client");
            } else {
                rd.issue(p + "/rate_cap", "expected a number or an array");
            }
            for (double c : caps)
                if (!(c > 0.0) || !std::isfinite(c)) {
                    rd.issue(p + "/rate_cap", "rate caps must be positive");
                    break;
                }
        }
        std::vector<Link> links;
        const json* mesh = rd.array(*t, p, "inp_success_prob", false);
        const json* ls = rd.array(*t, p, "links", false);
        if (mesh && ls) rd.issue(p, "give either inp_success_prob or links, not both");
        else if (!mesh && !ls) rd.issue(p + "/links", "missing required field (or inp_success_prob)");
        if (inps && cl && mesh && !ls) {
            if (mesh->size() != static_cast<std::size_t>(*inps)) rd.issue(p + "/inp_success_prob", "expected one entry per InP");
            for (std::size_t k = 0; k < mesh->size(); ++k) {
                const json& r = (*mesh)[k];
                if (!r.is_number() || !(r.get<double>() > 0.0 && r.get<double>() < 1.0)) {
                    rd.issue(p + "/inp_success_prob/" + std::to_string(k), "expected a number in (0, 1)");
                    continue;
                }
                for (int i = 0; i < *cl; ++i) links.push_back({static_cast<int>(k), i, r.get<double>()});
            }
        }
        if (inps && cl && ls && !mesh) {
            for (std::size_t n = 0; n < ls->size(); ++n) {
                const std::string lp = p + "/links/" + std::to_string(n);
                const json& e = (*ls)[n];
                if (!e.is_object()) {
                    rd.issue(lp, "expected an object");
                    continue;
                }
                const auto k = rd.integer(e, lp, "inp", true, 0, *inps - 1);
                const auto i = rd.integer(e, lp, "client", true, 0, *cl - 1);
                const auto r = rd.number(e, lp, "r", true, 0.0, 1.0, true, true);
                if (k && i && r) links.push_back({static_cast<int>(*k), static_cast<int>(*i), *r});
            }
        }
        const std::size_t before = rd.issues.size();
        if (inps && cl && cs && before == 0) {
            try {
                topo.emplace(static_cast<int>(*inps), static_cast<int>(*cl), static_cast<int>(*cs), links, caps);
            } catch (const Error& e) {
                rd.issue(p, e.what());
            }
        }
    }

    // qos
    std::optional<QosSpec> spec;
    std::map<PairId, double> w_star;
    std::set<PairId> required_pairs;
    if (const json* q = rd.object(doc, "", "qos", true)) {
        const std::string p = "/qos";
        const auto ts = rd.integer(*q, p, "frame_slots", true, 1, 1 << 20);
        const json* reqs = rd.array(*q, p, "requirements", false);
        if (topo && ts) spec = QosSpec::none(*topo, static_cast<int>(*ts));
        {
            std::set<PairId> seen;
            for (std::size_t n = 0; reqs && n < reqs->size(); ++n) {
                const std::string rp = p + "/requirements/" + std::to_string(n);
                const json& e = (*reqs)[n];
                if (!e.is_object()) {
                    rd.issue(rp, "expected an object");
                    continue;
                }
                const auto ref = pair_ref(rd, e, rp, clients, classes);
                const auto g = rd.number(e, rp, "gamma", true, 0.0, 1.0, false, true);
                const auto qq = rd.number(e, rp, "q", true, 0.0, 1.0, false, true);
                const auto w = rd.number(e, rp, "w_star", false, 0.0, kInf, true, true);
                if (!ref || !topo) continue;
                const PairId pr = topo->pair(ref->client, ref->cls);
                if (!seen.insert(pr).second) {
                    rd.issue(rp, "duplicate requirement for this (client, class)");
                    continue;
                }
                if (g && spec) spec->gamma[static_cast<std::size_t>(pr)] = *g;
                if (qq && spec) spec->q[static_cast<std::size_t>(pr)] = *qq;
                if (w) w_star[pr] = *w;
                if ((g && *g > 0.0) || (qq && *qq > 0.0) || w) required_pairs.insert(pr);
            }
        }
    }

    // arrivals
    std::optional<ArrivalProcess> arrivals;
    std::vector<bool> has_flow;
    if (const json* a = rd.object(doc, "", "arrivals", true)) {
        const std::string p = "/arrivals";
        const auto a_max = rd.integer(*a, p, "a_max", true, 1, std::int64_t{1} << 40);
        const json* flows = rd.array(*a, p, "flows", true);
        if (flows) {
            std::vector<ArrivalKind> kinds(static_cast<std::size_t>(topo ? topo->pair_count() : 0), NoArrivals{});
            has_flow.assign(kinds.size(), false);
            for (std::size_t n = 0; n < flows->size(); ++n) {
                const std::string fp = p + "/flows/" + std::to_string(n);
                const json& e = (*flows)[n];
                if (!e.is_object()) {
                    rd.issue(fp, "expected an object");
                    continue;
                }
                const auto ref = pair_ref(rd, e, fp, clients, classes);
                const auto kind = rd.string(e, fp, "kind", true, {"none", "constant", "poisson", "pareto"});
                std::optional<double> rate;
                if (kind && *kind != "none")
                    rate = rd.number(e, fp, "rate", true, 0.0, a_max ? static_cast<double>(*a_max) : kInf, false, !a_max);
                if (!ref || !kind || !topo || !a_max) continue;
                const auto idx = static_cast<std::size_t>(topo->pair(ref->client, ref->cls));
                if (has_flow[idx]) {
                    rd.issue(fp, "duplicate flow for this (client, class)");
                    continue;
                }
                has_flow[idx] = true;
                if (*kind == "none") continue;
                if (!rate) continue;
                if (*kind == "constant") {
                    if (*rate != std::floor(*rate)) rd.issue(fp + "/rate", "constant arrivals need an integer rate");
                    else kinds[idx] = ConstantArrivals{static_cast<std::int64_t>(*rate)};
                } else if (*kind == "poisson") {
                    kinds[idx] = PoissonArrivals{*rate};
                } else {
                    const double shape = rd.number(e, fp, "shape", false, 1.0, 100.0, true, false).value_or(2.5);
                    if (*rate > 0.0) {
                        try {
                            kinds[idx] = ArrivalProcess::calibrated_pareto(*rate, shape, *a_max);
                        } catch (const Error& err) {
                            rd.issue(fp, err.what());
                        }
                    }
                }
            }
            for (PairId pr : required_pairs)
                if (!has_flow[static_cast<std::size_t>(pr)])
                    rd.issue("/qos/requirements", "client " + std::to_string(topo->client_of(pr)) + " class " +
                                                      std::to_string(topo->class_of(pr)) + " has a requirement but no arrival flow");
            if (topo && a_max) arrivals.emplace(std::move(kinds), *a_max);
        }
    }

    // utility
    std::optional<UtilityFunction> utility;
    if (const json* u = rd.object(doc, "", "utility", true)) {
        const std::string p = "/utility";
        const auto kind = rd.string(*u, p, "kind", true, {"alpha_fair", "linear", "none"});
        if (kind && topo && !has_flow.empty()) {
            if (*kind == "none") {
                utility = UtilityFunction::zero(topo->pair_count());
            } else if (*kind == "alpha_fair") {
                const json* w = rd.array(*u, p, "weights", true);
                const json* al = rd.array(*u, p, "alphas", true);
                std::vector<double> ws, as;
                bool ok = w && al;
                for (auto [arr, key, out, lo, hi, lo_open] :
                     {std::tuple{w, "weights", &ws, 0.0, kInf, false}, std::tuple{al, "alphas", &as, 0.0, 1.0, true}}) {
                    if (!arr) continue;
                    if (arr->size() != static_cast<std::size_t>(classes)) {
                        rd.issue(p + "/" + key, "expected one entry per class");
                        ok = false;
                    }
                    for (std::size_t c = 0; c < arr->size(); ++c) {
                        const json& x = (*arr)[c];
                        const bool good = x.is_number() && (lo_open ? x.get<double>() > lo : x.get<double>() >= lo) &&
                                          x.get<double>() < hi;
                        if (!good) {
                            rd.issue(p + "/" + key + "/" + std::to_string(c), "value out of range");
                            ok = false;
                        } else {
                            out->push_back(x.get<double>());
                        }
                    }
                }
                if (ok) utility.emplace(UtilityFunction::AlphaFair{ws, as}, classes, has_flow);
            } else {
                const json* cs = rd.array(*u, p, "coeffs", true);
                std::vector<double> coeffs(static_cast<std::size_t>(topo->pair_count()), 0.0);
                for (std::size_t n = 0; cs && n < cs->size(); ++n) {
                    const std::string cp = p + "/coeffs/" + std::to_string(n);
                    const auto ref = pair_ref(rd, (*cs)[n], cp, clients, classes);
                    const auto c = rd.number((*cs)[n], cp, "coeff", true, -1e12, 1e12);
                    if (ref && c) coeffs[static_cast<std::size_t>(topo->pair(ref->client, ref->cls))] = *c;
                }
                if (cs) utility.emplace(UtilityFunction::Linear{coeffs});
            }
        }
    }

    // run
    RunConfig run;
    PriorMode mode = PriorMode::PerSlot;
    SolverOptions solver;
    if (const json* r = rd.object(doc, "", "run", true)) {
        const std::string p = "/run";
        if (auto h = rd.integer(*r, p, "horizon", true, 1, std::int64_t{1} << 40)) run.horizon = *h;
        if (const json* s = rd.field(*r, p, "seed", false)) {
            if (s->is_number_unsigned()) run.seed = s->get<std::uint64_t>();
            else rd.issue(p + "/seed", "expected a nonnegative integer");
        }
        if (auto rec = rd.string(*r, p, "record", false, {"per_frame", "summary"}))
            run.record = *rec == "per_frame" ? Record::PerFrame : Record::Summary;
        if (const json* d = rd.field(*r, p, "debug_slack", false)) {
            if (d->is_boolean()) run.debug_slack = d->get<bool>();
            else rd.issue(p + "/debug_slack", "expected a boolean");
        }
        if (auto m = rd.string(*r, p, "prior_mode", false, {"per_slot", "frame_constant"}))
            mode = *m == "per_slot" ? PriorMode::PerSlot : PriorMode::FrameConstant;
        if (auto t = rd.number(*r, p, "solver_tol", false, 0.0, 1.0, true, false)) solver.tol = *t;
        if (auto it = rd.integer(*r, p, "max_iterations", false, 1, 1 << 30)) solver.max_iterations = static_cast<int>(*it);
    }

    // policies
    std::vector<PolicyConfig> policies;
    if (const json* ps = rd.array(doc, "", "policies", true)) {
        if (ps->empty()) rd.issue("/policies", "at least one policy is required");
        std::set<std::string> names;
        for (std::size_t n = 0; n < ps->size(); ++n) {
            const std::string pp = "/policies/" + std::to_string(n);
            const json& e = (*ps)[n];
            if (!e.is_object()) {
                rd.issue(pp, "expected an object");
                continue;
            }
            PolicyConfig cfg;
            cfg.mode = mode;
            cfg.solver = solver;
            const auto nm = rd.string(e, pp, "name", true);
            const auto kind = rd.string(e, pp, "kind", true, {"mdp", "dp_noqos", "stationary"});
            if (nm) {
                if (!valid_name(*nm)) rd.issue(pp + "/name", "must use only letters, digits, '-', '_', '.'");
                else if (!names.insert(*nm).second) rd.issue(pp + "/name", "duplicate policy name");
                cfg.name = *nm;
            }
            if (kind) cfg.kind = *kind == "mdp" ? PolicyKind::Mdp : *kind == "dp_noqos" ? PolicyKind::DpNoQos : PolicyKind::Stationary;
            if (const json* v = rd.field(e, pp, "v", false)) {
                if (v->is_number()) {
                    if (v->get<double>() < 0.0) rd.issue(pp + "/v", "V must be nonnegative");
                    cfg.v = v->get<double>();
                } else if (v->is_object()) {
                    VRule rule;
                    if (auto c = rd.number(*v, pp + "/v", "coefficient", true, 0.0, kInf, false, true)) rule.coefficient = *c;
                    if (auto x = rd.number(*v, pp + "/v", "exponent", true, 0.0, 1.0, false, true)) rule.exponent = *x;
                    cfg.v = rule;
                } else {
                    rd.issue(pp + "/v", "expected a number or {coefficient, exponent}");
                }
            } else {
                cfg.v = VRule{};
            }
            const json* prior = rd.field(e, pp, "prior", kind && *kind == "stationary");
            if (prior && kind && *kind != "stationary") rd.issue(pp + "/prior", "only stationary policies take a prior");
            if (prior && kind && *kind == "stationary" && topo && spec) {
                const int ts = spec->frame_slots;
                if (prior->is_string() && prior->get<std::string>() == "uniform") {
                    cfg.fixed = SchedulePrior::uniform(*topo, ts, mode);
                } else if (prior->is_object()) {
                    const json* es = rd.array(*prior, pp + "/prior", "entries", true);
                    SchedulePrior sp(*topo, ts, mode);
                    bool ok = es != nullptr;
                    for (std::size_t m = 0; es && m < es->size(); ++m) {
                        const std::string ep = pp + "/prior/entries/" + std::to_string(m);
                        const auto k = rd.integer((*es)[m], ep, "inp", true, 0, topo->inp_count() - 1);
                        const auto ref = pair_ref(rd, (*es)[m], ep, clients, classes);
                        const auto pv = rd.number((*es)[m], ep, "p", true, 0.0, 1.0);
                        if (!k || !ref || !pv) {
                            ok = false;
                            continue;
                        }
                        const auto l = topo->link_index(static_cast<int>(*k), ref->client);
                        if (!l) {
                            rd.issue(ep, "no link between this InP and client");
                            ok = false;
                            continue;
                        }
                        for (int s = 0; s < sp.stored_slots(); ++s) sp.at(*l, ref->cls, s) = *pv;
                    }
                    if (ok) {
                        try {
                            sp.validate(*topo);
                            cfg.fixed = std::move(sp);
                        } catch (const Error& err) {
                            rd.issue(pp + "/prior", err.what());
                        }
                    }
                } else {
                    rd.issue(pp + "/prior", "expected \"uniform\" or {entries: [...]}");
                }
            }
            policies.push_back(std::move(cfg));
        }
    }

    if (spec && topo) {
        try {
            spec->validate(*topo);
        } catch (const Error& e) {
            rd.issue("/qos", e.what());
        }
    }
    if (!rd.issues.empty() || !topo || !spec || !arrivals || !utility) {
        if (rd.issues.empty()) rd.issue("", "incomplete scenario");
        throw SchemaError(std::move(rd.issues));
    }
    Scenario sc{name,
                Instance{std::move(*topo), std::move(*spec), std::move(*arrivals), std::move(*utility)},
                std::move(policies),
                run,
                mode,
                std::move(w_star),
                doc};
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::vector<SchemaIssue>{{"", std::string("not valid JSON: ") + e.what()}});
    }
    return parse_scenario(doc, path.stem().string());
}

namespace {

json pair_key(const Topology& t, PairId p) { return {{"client", t.client_of(p)}, {"class", t.class_of(p)}}; }

bool domain_feasible(const Scenario& sc) {
    const LinearizedDomain d = build_linearized_polyhedron(sc.instance.topo, sc.instance.spec, sc.mode);
    const std::vector<double> zero(static_cast<std::size_t>(d.poly.var_count()), 0.0);
    return lp_solve(zero, d.poly).status == SolveStatus::Optimal;
}

json slater_json(const SlaterEstimate& s) {
    return {{"zeta", finite_or_null(s.zeta)},
            {"unbounded", s.unbounded},
            {"assumption_holds", s.assumption_holds},
            {"k1", s.k1},
            {"k2", opt_json(s.k2)},
            {"delta_min", opt_json(s.delta_min)},
            {"k4", opt_json(s.k4)},
            {"epsilon", opt_json(s.epsilon)}};
}

}  // namespace

json validate_report(const Scenario& sc) {
    const Topology& t = sc.instance.topo;
    const QosSpec& s = sc.instance.spec;
    json rep;
    rep["scenario"] = sc.name;
    rep["schema_version"] = kSchemaVersion;
    rep["prior_mode"] = to_string(sc.mode);
    rep["frame_slots"] = s.frame_slots;
    json warnings = json::array();

    const TheoryConstants tc = theory_constants(t, s, sc.instance.arrivals);
    json cond = json::array();
    int failing = 0;
    for (const auto& [p, th] : tc.condition_threshold) {
        json e = pair_key(t, p);
        e["threshold"] = finite_or_null(th);
        e["met"] = tc.condition_met.at(p);
        cond.push_back(e);
        if (!tc.condition_met.at(p) && ++failing <= 5)
            warnings.push_back("condition (20) fails for client " + std::to_string(t.client_of(p)) + " class " +
                               std::to_string(t.class_of(p)) + ": T_s <= " + fmt(th));
    }
    if (failing > 5) warnings.push_back("condition (20) fails for " + std::to_string(failing - 5) + " more pairs");
    rep["condition_20"] = {{"all", tc.condition_all}, {"pairs", cond}};

    const bool feasible = domain_feasible(sc);
    rep["feasible"] = feasible;
    if (!feasible) {
        rep["message"] = "infeasible linearized domain";
        rep["warnings"] = warnings;
        return rep;
    }
    const SlaterEstimate se = slater_margin(t, s, std::nullopt, sc.mode);
    rep["slater"] = {{"zeta", finite_or_null(se.zeta)}, {"unbounded", se.unbounded},
                     {"assumption_holds", se.assumption_holds}};
    if (!se.assumption_holds) warnings.push_back("Slater margin is zero: the QoS rows are tight");

    const std::vector<double> lam = sc.instance.arrivals.means();
    const Membership m = stability_membership(lam, t, s, sc.mode);
    rep["arrival_rates_supported"] = m.member;
    if (!m.member) warnings.push_back("mean arrival rates lie outside the approximate stability region");
    for (const auto& pg : guarantee_report(t, s, sc.instance.arrivals, sc.w_star).pairs)
        if (pg.gamma_q_threshold && s.gamma[static_cast<std::size_t>(pg.pair)] * s.q[static_cast<std::size_t>(pg.pair)] < *pg.gamma_q_threshold)
            warnings.push_back("client " + std::to_string(t.client_of(pg.pair)) + " class " +
                               std::to_string(t.class_of(pg.pair)) + ": gamma*q below the delay threshold " +
                               fmt(*pg.gamma_q_threshold));
    rep["message"] = "feasible";
    rep["warnings"] = warnings;
    return rep;
}

std::string validate_text(const json& rep) {
    std::ostringstream os;
    os << "scenario " << rep["scenario"].get<std::string>() << " (" << rep["prior_mode"].get<std::string>()
       << ", T_s = " << rep["frame_slots"].get<int>() << ")\n";
    if (!rep["feasible"].get<bool>()) {
        os << "infeasible linearized domain\n";
    } else {
        os << "feasible";
        os << (rep["condition_20"]["all"].get<bool>() ? ", condition (20) satisfied" : ", condition (20) not satisfied");
        const json& z = rep["slater"]["zeta"];
        if (rep["slater"]["unbounded"].get<bool>()) os << ", zeta unbounded (no QoS rows)";
        else os << (rep["slater"]["assumption_holds"].get<bool>() ? ", zeta > 0" : ", zeta = 0") << " (zeta = "
                << fmt(z.get<double>()) << ")";
        os << "\n";
    }
    for (const auto& w : rep["warnings"]) os << "warning: " << w.get<std::string>() << "\n";
    return os.str();
}

json bounds_report(const Scenario& sc) {
    const Topology& t = sc.instance.topo;
    const QosSpec& s = sc.instance.spec;
    const ArrivalProcess& arr = sc.instance.arrivals;
    const GuaranteeReport g = guarantee_report(t, s, arr, sc.w_star);
    json rep;
    rep["scenario"] = sc.name;
    rep["prior_mode"] = to_string(sc.mode);
    rep["inps"] = t.inp_count();
    rep["frame_slots"] = s.frame_slots;
    rep["constants"] = {{"k1", g.constants.k1},
                        {"b1", g.constants.b1},
                        {"approximation_gap", g.approximation_gap},
                        {"condition_all", g.constants.condition_all}};
    json pairs = json::array();
    for (const PairGuarantee& pg : g.pairs) {
        const auto i = static_cast<std::size_t>(pg.pair);
        if (pg.lambda == 0.0 && !s.active(pg.pair) && !pg.w_star) continue;
        json e = pair_key(t, pg.pair);
        e["lambda"] = pg.lambda;
        e["second_moment"] = arr.second_moment(pg.pair);
        e["gamma"] = s.gamma[i];
        e["q"] = s.q[i];
        e["gamma_q"] = s.gamma[i] * s.q[i];
        e["protection_level"] = pg.gamma_level;
        e["throughput"] = pg.throughput;
        e["delay_bound"] = opt_json(pg.delay);
        e["w_star"] = opt_json(pg.w_star);
        e["gamma_q_threshold"] = opt_json(pg.gamma_q_threshold);
        if (pg.gamma_q_threshold) e["delay_requirement_met"] = s.gamma[i] * s.q[i] >= *pg.gamma_q_threshold;
        e["rate_covered"] = pg.rate_covered;
        e["condition_threshold"] = pg.condition_threshold ? finite_or_null(*pg.condition_threshold) : json(nullptr);
        e["condition_met"] = pg.condition_met;
        pairs.push_back(e);
    }
    rep["pairs"] = pairs;

    const bool feasible = domain_feasible(sc);
    rep["feasible"] = feasible;
    if (!feasible) {
        rep["slater"] = nullptr;
        return rep;
    }
    const std::vector<double> lam = arr.means();
    try {
        rep["slater"] = slater_json(slater_margin(t, s, std::span<const double>(lam), sc.mode));
        rep["slater"]["lambda_supported"] = true;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::Infeasible) throw;
        rep["slater"] = slater_json(slater_margin(t, s, std::nullopt, sc.mode));
        rep["slater"]["lambda_supported"] = false;
    }
    return rep;
}

RunResult run_cell(const Scenario& sc, std::size_t policy, std::uint64_t seed, bool debug_slack) {
    const PolicyConfig& cfg = sc.policies.at(policy);
    Policy pol(sc.instance.topo, sc.instance.spec, sc.instance.utility, cfg, sc.run.horizon);
    RunConfig rc = sc.run;
    rc.seed = seed;
    rc.debug_slack = rc.debug_slack || debug_slack;
    return run_scenario(sc.instance, pol, rc);
}

void write_frames_csv(std::ostream& out, const Scenario& sc, const RunResult& r) {
    const Topology& t = sc.instance.topo;
    const RunSummary& s = r.summary;
    out << "# scenario=" << sc.name << " policy=" << s.policy << " seed=" << s.seed << " horizon=" << s.horizon
        << " v=" << fmt(s.v) << " prior_mode=" << to_string(sc.mode) << "\n";
    out << "frame,client,class,arrivals,service,backlog,delivery_ratio,qos_met,expected_service,utility\n";
    const double KTs = static_cast<double>(t.inp_count()) * sc.instance.spec.frame_slots;
    for (const FrameMetrics& f : r.frames) {
        std::int64_t ta = 0, ts = 0, tb = 0;
        double te = 0.0;
        bool all_met = true;
        for (PairId p = 0; p < t.pair_count(); ++p) {
            const auto i = static_cast<std::size_t>(p);
            out << f.frame << ',' << t.client_of(p) << ',' << t.class_of(p) << ',' << f.arrivals[i] << ','
                << f.service[i] << ',' << f.backlog[i] << ',' << fmt(f.delivery_ratio[i]) << ','
                << int{f.qos_met[i]} << ',' << fmt(f.expected_service[i]) << ",\n";
            ta += f.arrivals[i];
            ts += f.service[i];
            tb += f.backlog[i];
            te += f.expected_service[i];
            if (sc.instance.spec.active(p) && !f.qos_met[i]) all_met = false;
        }
        out << f.frame << ",-1,-1," << ta << ',' << ts << ',' << tb << ',' << fmt(static_cast<double>(ts) / KTs) << ','
            << int{all_met} << ',' << fmt(te) << ',' << fmt(f.utility) << "\n";
    }
}

json summary_json(const Scenario& sc, const RunResult& r) {
    const Topology& t = sc.instance.topo;
    const QosSpec& spec = sc.instance.spec;
    const RunSummary& s = r.summary;
    const auto delays = delay_bound(spec, t, sc.instance.arrivals);
    json pairs = json::array();
    for (PairId p = 0; p < t.pair_count(); ++p) {
        const auto i = static_cast<std::size_t>(p);
        json e = pair_key(t, p);
        e["gamma"] = spec.gamma[i];
        e["q"] = spec.q[i];
        e["lambda"] = sc.instance.arrivals.mean(p);
        e["reliability"] = s.reliability[i];
        e["mean_delay"] = opt_json(s.mean_delay[i]);
        e["delay_bound"] = opt_json(delays[i]);
        auto w = sc.w_star.find(p);
        e["w_star"] = w == sc.w_star.end() ? json(nullptr) : json(w->second);
        e["mean_service"] = s.mean_service[i];
        e["final_backlog"] = s.final_backlog[i];
        pairs.push_back(e);
    }
    json j = {{"scenario", sc.name},
              {"policy", s.policy},
              {"seed", s.seed},
              {"horizon", s.horizon},
              {"v", s.v},
              {"prior_mode", to_string(sc.mode)},
              {"frame_slots", spec.frame_slots},
              {"pairs", pairs},
              {"total_final_backlog", s.total_final_backlog},
              {"time_avg_utility", s.time_avg_utility},
              {"solver", {{"mean_gap", s.mean_gap}, {"max_gap", s.max_gap}, {"mean_iterations", s.mean_iterations},
                          {"max_iteration_frames", s.max_iteration_frames}}}};
    j["min_slack"] = opt_json(s.min_slack);
    return j;
}

void write_cell(const std::filesystem::path& dir, const Scenario& sc, const RunResult& r) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) fail(ErrorCode::Io, "cannot write " + (dir / name).string());
        return f;
    };
    {
        std::ofstream f = open("frames.csv");
        write_frames_csv(f, sc, r);
    }
    {
        std::ofstream f = open("summary.json");
        f << summary_json(sc, r).dump(2) << "\n";
    }
    {
        std::ofstream f = open("config-echo.json");
        json echo = sc.document;
        echo["run"]["seed"] = r.summary.seed;
        f << echo.dump(2) << "\n";
    }
}

std::filesystem::path cell_dir(const std::filesystem::path& out, const Scenario& sc, std::size_t policy,
                               std::optional<std::uint64_t> seed) {
    std::filesystem::path d = out / sc.name;
    if (seed) d /= "seed-" + std::to_string(*seed);
    return d / sc.policies.at(policy).name;
}

void run_all(const Scenario& sc, const std::filesystem::path& out, const std::vector<std::uint64_t>& seeds,
             int jobs, bool debug_slack) {
    require(!seeds.empty(), "run_all: no seeds");
    struct Cell {
        std::size_t policy;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (std::uint64_t s : seeds)
        for (std::size_t p = 0; p < sc.policies.size(); ++p) cells.push_back({p, s});
    const bool per_seed = seeds.size() > 1;

    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr first;
    auto worker = [&] {
        for (std::size_t n; (n = next.fetch_add(1)) < cells.size();) {
            try {
                const RunResult r = run_cell(sc, cells[n].policy, cells[n].seed, debug_slack);
                write_cell(cell_dir(out, sc, cells[n].policy, per_seed ? std::optional(cells[n].seed) : std::nullopt), sc, r);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!first) first = std::current_exception();
                next = cells.size();
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
    std::vector<std::thread> pool;
    for (int i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (first) std::rethrow_exception(first);
}

namespace {

using CsvRow = std::vector<std::string>;

std::map<std::tuple<long, long, long>, CsvRow> read_frames(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::map<std::tuple<long, long, long>, CsvRow> rows;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        CsvRow f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (!header) {
            if (f.size() != 10 || f[0] != "frame" || f[9] != "utility")
                fail(ErrorCode::Validation, path.string() + ": unexpected header");
            header = true;
            continue;
        }
        if (f.size() != 10) fail(ErrorCode::Validation, path.string() + ": malformed row: " + line);
        try {
            rows[{std::stol(f[0]), std::stol(f[1]), std::stol(f[2])}] = f;
        } catch (const std::exception&) {
            fail(ErrorCode::Validation, path.string() + ": malformed row: " + line);
        }
    }
    if (!header) fail(ErrorCode::Validation, path.string() + ": missing header");
    return rows;
}

std::string diff(const std::string& a, const std::string& b) {
    if (a.empty() || b.empty()) return "";
    return fmt(std::stod(a) - std::stod(b));
}

std::filesystem::path frames_path(const std::filesystem::path& p) {
    return std::filesystem::is_directory(p) ? p / "frames.csv" : p;
}

}  // namespace

void compare_runs(const std::filesystem::path& a, const std::filesystem::path& b, std::ostream& out) {
    const auto ra = read_frames(frames_path(a));
    const auto rb = read_frames(frames_path(b));
    if (ra.size() != rb.size()) fail(ErrorCode::Validation, "compare: runs have different row counts");
    out << "frame,client,class,arrivals_a,arrivals_b,service_a,service_b,service_diff,backlog_a,backlog_b,"
           "backlog_diff,delivery_ratio_a,delivery_ratio_b,delivery_ratio_diff,qos_met_a,qos_met_b,"
           "utility_a,utility_b,utility_diff\n";
    for (const auto& [key, x] : ra) {
        auto it = rb.find(key);
        if (it == rb.end()) fail(ErrorCode::Validation, "compare: row " + x[0] + "," + x[1] + "," + x[2] + " missing in second run");
        const CsvRow& y = it->second;
        out << x[0] << ',' << x[1] << ',' << x[2] << ',' << x[3] << ',' << y[3] << ',' << x[4] << ',' << y[4] << ','
            << diff(x[4], y[4]) << ',' << x[5] << ',' << y[5] << ',' << diff(x[5], y[5]) << ',' << x[6] << ','
            << y[6] << ',' << diff(x[6], y[6]) << ',' << x[7] << ',' << y[7] << ',' << x[9] << ',' << y[9] << ','
            << diff(x[9], y[9]) << "\n";
    }
}

void export_polyhedron(const Scenario& sc, std::ostream& out) {
    const LinearizedDomain d = build_linearized_polyhedron(sc.instance.topo, sc.instance.spec, sc.mode);
    d.poly.write_text(out);
}

}  // namespace qosshare
