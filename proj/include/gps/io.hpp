#pragma once

// JSON scenario files and CSV output. Values are exact rationals; JSON
// numbers and strings ("3/4", "0.25") are both accepted, and scenarios are
// written back with exact "p/q" strings.

#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "gps/curves.hpp"
#include "gps/simulator.hpp"

namespace gps::io {

using json = nlohmann::ordered_json;
using Q = rational;

/// A scenario file problem, located by a JSON path such as flows[1].weight.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(const std::string& path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct Analysis {
    std::optional<std::string> flow;
    std::vector<Q> grid;
    std::optional<Q> tolerance;

    bool operator==(const Analysis&) const = default;
};

struct ScenarioFile {
    std::vector<FlowSpec<Q>> flows;
    std::vector<std::string> envelope_kinds;  // token-buckets | unbounded | pl-concave
    std::vector<std::string> arrival_kinds;   // greedy | pl | "" (absent)
    ServiceCurve<Q> curve = ServiceCurve<Q>::constant_rate(Q(0));
    std::string curve_kind = "latency-rates";  // latency-rates | pl-convex
    std::optional<Plf<Q>> process;
    std::string process_kind;  // lazy | pl | "" (absent)
    std::optional<Q> horizon;
    Analysis analysis;

    bool operator==(const ScenarioFile& o) const {
        if (flows.size() != o.flows.size()) return false;
        for (std::size_t j = 0; j < flows.size(); ++j) {
            const auto &a = flows[j], &b = o.flows[j];
            if (a.id != b.id || a.weight != b.weight || !(a.envelope == b.envelope) || a.arrivals != b.arrivals)
                return false;
        }
        return envelope_kinds == o.envelope_kinds && arrival_kinds == o.arrival_kinds && curve == o.curve &&
               curve_kind == o.curve_kind && process == o.process && process_kind == o.process_kind &&
               horizon == o.horizon && analysis == o.analysis;
    }

    std::size_t flow_index(const std::string& id) const {
        for (std::size_t j = 0; j < flows.size(); ++j)
            if (flows[j].id == id) return j;
        throw std::out_of_range("unknown flow id '" + id + "'");
    }

    /// The simulation input; needs arrivals for every flow, a process and a horizon.
    Scenario<Q> scenario() const {
        for (std::size_t j = 0; j < flows.size(); ++j)
            if (!flows[j].arrivals) throw ScenarioError("flows[" + std::to_string(j) + "].arrivals", "missing");
        if (!process) throw ScenarioError("service.process", "missing");
        if (!horizon) throw ScenarioError("horizon", "missing");
        return Scenario<Q>{flows, *process, *horizon};
    }
};

/// "t0:t1:step" (t1 included when hit) or a comma-separated list.
inline std::vector<Q> parse_grid(const std::string& text) {
    std::vector<Q> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw std::invalid_argument("grid must be t0:t1:step or a list");
        Q t0 = parse_rational(parts[0]), t1 = parse_rational(parts[1]), step = parse_rational(parts[2]);
        if (!(step > 0)) throw std::invalid_argument("grid step must be positive");
        if ((t1 - t0) / step > Q(1000000)) throw std::invalid_argument("grid has too many points");
        for (Q t = t0; t <= t1; t += step) out.push_back(t);
    } else if (!text.empty()) {
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ',');) out.push_back(parse_rational(p));
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (out[k] < 0) throw std::invalid_argument("grid times must be nonnegative");
        if (k > 0 && !(out[k - 1] < out[k])) throw std::invalid_argument("grid times must be ascending");
    }
    return out;
}

namespace detail {

inline Q number(const json& j, const std::string& path) {
    try {
        if (j.is_string()) return parse_rational(j.get<std::string>());
        if (j.is_number()) return parse_rational(j.dump());
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(path, e.what());
    }
    throw ScenarioError(path, "expected a number or rational string");
}

inline const json& field(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) throw ScenarioError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ScenarioError(path + "." + key, "missing");
    return *it;
}

inline std::string kind_of(const json& j, const std::string& path) {
    const json& k = field(j, "kind", path);
    if (!k.is_string()) throw ScenarioError(path + ".kind", "expected a string");
    return k.get<std::string>();
}

inline const json& array_field(const json& j, const char* key, const std::string& path) {
    const json& a = field(j, key, path);
    if (!a.is_array()) throw ScenarioError(path + "." + key, "expected an array");
    return a;
}

inline Plf<Q> segments(const json& j, const std::string& path) {
    const json& arr = array_field(j, "segments", path);
    std::vector<Segment<Q>> segs;
    for (std::size_t k = 0; k < arr.size(); ++k) {
        std::string p = path + ".segments[" + std::to_string(k) + "]";
        segs.push_back({number(field(arr[k], "start", p), p + ".start"),
                        number(field(arr[k], "jump", p), p + ".jump"),
                        number(field(arr[k], "slope", p), p + ".slope")});
    }
    try {
        return Plf<Q>(std::move(segs));
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(path + ".segments", e.what());
    }
}

template <class F>
auto rethrow_at(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ScenarioError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(path, e.what());
    }
}

inline json segments_json(const Plf<Q>& f) {
    json arr = json::array();
    for (const auto& s : f.segments())
        arr.push_back({{"start", exact_string(s.start)}, {"jump", exact_string(s.jump)}, {"slope", exact_string(s.slope)}});
    return arr;
}

}  // namespace detail

inline ScenarioFile parse_scenario_json(const json& root) {
    using namespace detail;
    ScenarioFile sf;
    const json& flows = array_field(root, "flows", "");
    if (flows.empty()) throw ScenarioError("flows", "no flows");
    for (std::size_t j = 0; j < flows.size(); ++j) {
        const std::string p = "flows[" + std::to_string(j) + "]";
        const json& fj = flows[j];
        FlowSpec<Q> f;
        const json& id = field(fj, "id", p);
        if (!id.is_string()) throw ScenarioError(p + ".id", "expected a string");
        f.id = id.get<std::string>();
        for (const auto& g : sf.flows)
            if (g.id == f.id) throw ScenarioError(p + ".id", "duplicate flow id '" + f.id + "'");
        f.weight = number(field(fj, "weight", p), p + ".weight");
        if (!(f.weight > 0)) throw ScenarioError(p + ".weight", "weight must be positive");

        const json& ej = field(fj, "envelope", p);
        const std::string ep = p + ".envelope";
        std::string ekind = kind_of(ej, ep);
        if (ekind == "unbounded") {
            f.envelope = Envelope<Q>::unbounded();
        } else if (ekind == "token-buckets") {
            const json& pieces = array_field(ej, "pieces", ep);
            if (pieces.empty()) throw ScenarioError(ep + ".pieces", "no token buckets");
            std::vector<TokenBucket<Q>> buckets;
            for (std::size_t k = 0; k < pieces.size(); ++k) {
                std::string pp = ep + ".pieces[" + std::to_string(k) + "]";
                buckets.push_back({number(field(pieces[k], "sigma", pp), pp + ".sigma"),
                                   number(field(pieces[k], "rho", pp), pp + ".rho")});
            }
            f.envelope = rethrow_at(ep, [&] { return Envelope<Q>::token_buckets(buckets); });
        } else if (ekind == "pl-concave") {
            Plf<Q> plf = segments(ej, ep);
            f.envelope = rethrow_at(ep, [&] { return Envelope<Q>(plf); });
        } else {
            throw ScenarioError(ep + ".kind", "unknown envelope kind '" + ekind + "'");
        }

        std::string akind;
        if (auto it = fj.find("arrivals"); it != fj.end()) {
            const std::string ap = p + ".arrivals";
            akind = kind_of(*it, ap);
            if (akind == "greedy") {
                if (f.envelope.is_unbounded()) throw ScenarioError(ap, "greedy arrivals need a bounded envelope");
                f.arrivals = f.envelope.plf();
            } else if (akind == "pl") {
                f.arrivals = segments(*it, ap);
                if (!f.envelope.is_unbounded())
                    if (auto w = envelope_violation(*f.arrivals, f.envelope.plf()))
                        throw ScenarioError(ap, "arrivals exceed envelope: A(" + to_decimal(w->s) + ", " +
                                                    to_decimal(w->t) + ") - E(t - s) = " + to_decimal(w->excess));
            } else {
                throw ScenarioError(ap + ".kind", "unknown arrivals kind '" + akind + "'");
            }
        }
        sf.flows.push_back(std::move(f));
        sf.envelope_kinds.push_back(ekind);
        sf.arrival_kinds.push_back(akind);
    }

    const json& service = field(root, "service", "");
    const json& cj = field(service, "curve", "service");
    sf.curve_kind = kind_of(cj, "service.curve");
    if (sf.curve_kind == "latency-rates") {
        const json& pieces = array_field(cj, "pieces", "service.curve");
        std::vector<LatencyRate<Q>> lr;
        for (std::size_t k = 0; k < pieces.size(); ++k) {
            std::string pp = "service.curve.pieces[" + std::to_string(k) + "]";
            lr.push_back({number(field(pieces[k], "R", pp), pp + ".R"), number(field(pieces[k], "L", pp), pp + ".L")});
        }
        sf.curve = rethrow_at("service.curve", [&] { return ServiceCurve<Q>::latency_rates(lr); });
    } else if (sf.curve_kind == "pl-convex") {
        Plf<Q> plf = segments(cj, "service.curve");
        sf.curve = rethrow_at("service.curve", [&] { return ServiceCurve<Q>(plf); });
    } else {
        throw ScenarioError("service.curve.kind", "unknown service curve kind '" + sf.curve_kind + "'");
    }
    if (auto it = service.find("process"); it != service.end()) {
        sf.process_kind = kind_of(*it, "service.process");
        if (sf.process_kind == "lazy") {
            sf.process = sf.curve.plf();
        } else if (sf.process_kind == "pl") {
            sf.process = segments(*it, "service.process");
            if (auto w = service_violation(*sf.process, sf.curve.plf()))
                throw ScenarioError("service.process", "service below curve: C(" + to_decimal(w->s) + ", " +
                                                           to_decimal(w->t) + ") - S(t - s) = " + to_decimal(w->excess));
        } else {
            throw ScenarioError("service.process.kind", "unknown service process kind '" + sf.process_kind + "'");
        }
    }

    if (auto it = root.find("horizon"); it != root.end()) {
        sf.horizon = number(*it, "horizon");
        if (!(*sf.horizon > 0)) throw ScenarioError("horizon", "horizon must be positive");
    }

    if (auto it = root.find("analysis"); it != root.end()) {
        const json& a = *it;
        if (!a.is_object()) throw ScenarioError("analysis", "expected an object");
        if (auto f = a.find("flow"); f != a.end()) {
            if (!f->is_string()) throw ScenarioError("analysis.flow", "expected a string");
            sf.analysis.flow = f->get<std::string>();
            bool known = false;
            for (const auto& fl : sf.flows) known = known || fl.id == *sf.analysis.flow;
            if (!known) throw ScenarioError("analysis.flow", "unknown flow id '" + *sf.analysis.flow + "'");
        }
        if (auto g = a.find("grid"); g != a.end()) {
            if (g->is_string()) {
                sf.analysis.grid = rethrow_at("analysis.grid", [&] { return parse_grid(g->get<std::string>()); });
            } else if (g->is_array()) {
                std::string joined;
                for (std::size_t k = 0; k < g->size(); ++k) {
                    Q t = number((*g)[k], "analysis.grid[" + std::to_string(k) + "]");
                    joined += (k ? "," : "") + exact_string(t);
                }
                sf.analysis.grid = rethrow_at("analysis.grid", [&] { return parse_grid(joined); });
            } else {
                throw ScenarioError("analysis.grid", "expected a string or an array");
            }
        }
        if (auto t = a.find("tolerance"); t != a.end()) {
            sf.analysis.tolerance = number(*t, "analysis.tolerance");
            if (*sf.analysis.tolerance < 0) throw ScenarioError("analysis.tolerance", "must be nonnegative");
        }
    }
    return sf;
}

inline ScenarioFile parse_scenario_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_scenario_json(root);
}

inline ScenarioFile parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("", "cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str());
}

/// Lossless JSON form of a parsed scenario file.
inline json scenario_json(const ScenarioFile& sf) {
    using detail::segments_json;
    json root;
    json flows = json::array();
    for (std::size_t j = 0; j < sf.flows.size(); ++j) {
        const auto& f = sf.flows[j];
        json fj;
        fj["id"] = f.id;
        fj["weight"] = exact_string(f.weight);
        const std::string& ekind = sf.envelope_kinds[j];
        if (ekind == "unbounded") {
            fj["envelope"] = {{"kind", "unbounded"}};
        } else if (ekind == "token-buckets") {
            json pieces = json::array();
            for (const auto& b : f.envelope.pieces())
                pieces.push_back({{"sigma", exact_string(b.sigma)}, {"rho", exact_string(b.rho)}});
            fj["envelope"] = {{"kind", "token-buckets"}, {"pieces", pieces}};
        } else {
            fj["envelope"] = {{"kind", "pl-concave"}, {"segments", segments_json(f.envelope.plf())}};
        }
        if (sf.arrival_kinds[j] == "greedy")
            fj["arrivals"] = {{"kind", "greedy"}};
        else if (sf.arrival_kinds[j] == "pl")
            fj["arrivals"] = {{"kind", "pl"}, {"segments", segments_json(*f.arrivals)}};
        flows.push_back(std::move(fj));
    }
    root["flows"] = std::move(flows);

    json service;
    if (sf.curve_kind == "latency-rates") {
        json pieces = json::array();
        for (const auto& p : sf.curve.pieces())
            pieces.push_back({{"R", exact_string(p.rate)}, {"L", exact_string(p.latency)}});
        service["curve"] = {{"kind", "latency-rates"}, {"pieces", pieces}};
    } else {
        service["curve"] = {{"kind", "pl-convex"}, {"segments", segments_json(sf.curve.plf())}};
    }
    if (sf.process_kind == "lazy")
        service["process"] = {{"kind", "lazy"}};
    else if (sf.process_kind == "pl")
        service["process"] = {{"kind", "pl"}, {"segments", segments_json(*sf.process)}};
    root["service"] = std::move(service);
    if (sf.horizon) root["horizon"] = exact_string(*sf.horizon);

    json analysis = json::object();
    if (sf.analysis.flow) analysis["flow"] = *sf.analysis.flow;
    if (!sf.analysis.grid.empty()) {
        json g = json::array();
        for (const auto& t : sf.analysis.grid) g.push_back(exact_string(t));
        analysis["grid"] = std::move(g);
    }
    if (sf.analysis.tolerance) analysis["tolerance"] = exact_string(*sf.analysis.tolerance);
    if (!analysis.empty()) root["analysis"] = std::move(analysis);
    return root;
}

inline std::string emit_scenario(const ScenarioFile& sf) { return scenario_json(sf).dump(2) + "\n"; }

// CSV -----------------------------------------------------------------------

/// `t,value` rows of a curve sampled on a grid.
inline std::string emit_curve_csv(const std::function<extended<Q>(const Q&)>& curve, const std::vector<Q>& grid) {
    std::string out = "t,value\n";
    for (const auto& t : grid) out += to_decimal(t) + "," + to_decimal(curve(t)) + "\n";
    return out;
}

/// `t,value,slope` rows at the breakpoints of a curve; the slope holds up to
/// the next row. For a curve that becomes infinite, the last row has value inf.
inline std::string emit_breakpoints_csv(const Plf<Q>& f, const std::optional<Q>& infinite_from = std::nullopt) {
    std::string out = "t,value,slope\n";
    const Plf<Q> g = f.normalized();
    for (const auto& s : g.segments()) {
        if (infinite_from && !(s.start < *infinite_from)) break;
        out += to_decimal(s.start) + "," + to_decimal(f.right_limit(s.start)) + "," + to_decimal(s.slope) + "\n";
    }
    if (infinite_from) out += to_decimal(*infinite_from) + ",inf,\n";
    return out;
}

/// `t,D_<id>...,B_<id>...` rows of a trajectory.
inline std::string emit_trajectory_csv(const Trajectory<Q>& tr, const std::vector<std::string>& ids,
                                       const std::vector<Q>& grid) {
    std::string out = "t";
    for (const auto& id : ids) out += ",D_" + id;
    for (const auto& id : ids) out += ",B_" + id;
    out += "\n";
    for (const auto& t : grid) {
        out += to_decimal(t);
        for (std::size_t j = 0; j < tr.size(); ++j) out += "," + to_decimal(tr.departures[j](t));
        for (std::size_t j = 0; j < tr.size(); ++j) out += "," + to_decimal(tr.backlog(j, t));
        out += "\n";
    }
    return out;
}

/// `t,members` rows: flows without backlog from each event on (space separated).
inline std::string emit_events_csv(const Trajectory<Q>& tr, const std::vector<std::string>& ids) {
    std::string out = "t,members\n";
    for (const auto& e : tr.events) {
        out += to_decimal(e.time) + ",";
        for (std::size_t k = 0; k < e.idle.size(); ++k) out += (k ? " " : "") + ids[e.idle[k]];
        out += "\n";
    }
    return out;
}

}  // namespace gps::io
