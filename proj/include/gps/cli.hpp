#pragma once

// Command dispatch for the gpscurve tool. Exit status: 0 pass, 1 a check
// failed, 2 usage or scenario error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gps/bounds.hpp"
#include "gps/io.hpp"
#include "gps/oracle.hpp"
#include "gps/sampling.hpp"
#include "gps/simulator.hpp"

namespace gps::cli {

using Q = rational;

enum ExitCode : int { pass = 0, violation = 1, usage = 2 };

struct Options {
    std::optional<std::string> flow;
    std::optional<std::string> grid;
    std::optional<std::string> tolerance;
    std::uint64_t seed = 1;
    std::optional<std::string> out_dir;
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> names{"leftover", "universal", "simulate", "bounds", "verify", "sample"};
    return names;
}

namespace detail {

struct Context {
    const io::ScenarioFile& sf;
    const Options& opt;
    std::ostream& out;
    std::ostream& err;

    std::vector<std::string> ids() const {
        std::vector<std::string> v;
        for (const auto& f : sf.flows) v.push_back(f.id);
        return v;
    }

    std::optional<std::size_t> flow() const {
        if (opt.flow) return sf.flow_index(*opt.flow);
        if (sf.analysis.flow) return sf.flow_index(*sf.analysis.flow);
        return std::nullopt;
    }

    std::size_t required_flow() const {
        if (auto i = flow()) return *i;
        if (sf.flows.size() == 1) return 0;
        throw std::invalid_argument("this command needs --flow <id>");
    }

    std::vector<std::size_t> flows_of_interest() const {
        if (auto i = flow()) return {*i};
        std::vector<std::size_t> all(sf.flows.size());
        for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
        return all;
    }

    Q tolerance() const {
        if (opt.tolerance) {
            Q t = parse_rational(*opt.tolerance);
            if (t < 0) throw std::invalid_argument("tolerance must be nonnegative");
            return t;
        }
        return sf.analysis.tolerance.value_or(Q(0));
    }

    std::optional<std::vector<Q>> explicit_grid() const {
        if (opt.grid) return io::parse_grid(*opt.grid);
        if (!sf.analysis.grid.empty()) return sf.analysis.grid;
        return std::nullopt;
    }

    /// 17 points on [0, H]; H is the horizon or twice the last curve breakpoint.
    std::vector<Q> grid() const {
        if (auto g = explicit_grid()) return *g;
        Q h(0);
        if (sf.horizon) {
            h = *sf.horizon;
        } else {
            for (const auto& b : sf.curve.plf().breakpoints()) h = max_value(h, b);
            for (const auto& f : sf.flows)
                if (!f.envelope.is_unbounded())
                    for (const auto& b : f.envelope.plf().breakpoints()) h = max_value(h, b);
            h = h > 0 ? Q(2 * h) : Q(1);
        }
        std::vector<Q> g;
        for (int k = 0; k <= 16; ++k) g.push_back(h * k / 16);
        return g;
    }

    /// Writes `text` to --out/<name>, or to stdout without --out.
    void artifact(const std::string& name, const std::string& text) const {
        if (!opt.out_dir) {
            out << text;
            return;
        }
        std::filesystem::create_directories(*opt.out_dir);
        std::ofstream f(std::filesystem::path(*opt.out_dir) / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + name);
        f << text;
    }
};

template <class Report>
bool note(const Context& c, const Report& r) {
    c.err << r.summary() << "\n";
    return r.pass();
}

inline int cmd_leftover(const Context& c) {
    const std::size_t i = c.required_flow();
    auto curve = leftover<Q>(c.sf.flows, i, c.sf.curve);
    const std::string name = "leftover_" + c.sf.flows[i].id + ".csv";
    if (auto g = c.explicit_grid())
        c.artifact(name, io::emit_curve_csv([&](const Q& t) { return extended<Q>(curve(t)); }, *g));
    else
        c.artifact(name, io::emit_breakpoints_csv(curve.plf()));
    return pass;
}

inline int cmd_universal(const Context& c) {
    auto curve = universal<Q>(c.sf.flows, c.sf.curve);
    if (auto g = c.explicit_grid())
        c.artifact("universal.csv", io::emit_curve_csv([&](const Q& t) { return curve(t); }, *g));
    else
        c.artifact("universal.csv", io::emit_breakpoints_csv(curve.finite_part, curve.infinite_from));
    return pass;
}

inline int cmd_simulate(const Context& c) {
    auto tr = simulate(c.sf.scenario());
    auto grid = c.explicit_grid().value_or(tr.grid);
    c.artifact("trajectory.csv", io::emit_trajectory_csv(tr, c.ids(), grid));
    if (c.opt.out_dir) c.artifact("events.csv", io::emit_events_csv(tr, c.ids()));
    return note(c, gps_compliance<Q>(tr, tr.weights, c.tolerance())) ? pass : violation;
}

// Shares phi_j / sum phi for the flows of interest, and for all flows together.
inline std::vector<std::vector<Request<Q>>> default_share_sets(const Context& c) {
    Q total(0);
    for (const auto& f : c.sf.flows) total += f.weight;
    std::vector<std::vector<Request<Q>>> sets;
    for (auto i : c.flows_of_interest()) sets.push_back({{i, c.sf.flows[i].weight / total}});
    if (c.sf.flows.size() > 1) {
        std::vector<Request<Q>> all;
        for (std::size_t j = 0; j < c.sf.flows.size(); ++j) all.push_back({j, c.sf.flows[j].weight / total});
        sets.push_back(std::move(all));
    }
    return sets;
}

inline std::string set_label(const Context& c, const std::vector<Request<Q>>& shares) {
    std::string s = "{";
    for (std::size_t k = 0; k < shares.size(); ++k) s += (k ? "," : "") + c.sf.flows[shares[k].player].id;
    return s + "}";
}

inline bool check_bounds(const Context& c, const Trajectory<Q>& tr, const std::vector<std::vector<Request<Q>>>& sets) {
    const Q tol = c.tolerance();
    bool ok = true;
    for (auto i : c.flows_of_interest()) {
        auto rep = check_strict_service<Q>(tr, i, leftover<Q>(c.sf.flows, i, c.sf.curve), tol);
        rep.name += " " + c.sf.flows[i].id;
        ok = note(c, rep) && ok;
    }
    for (const auto& shares : sets) {
        auto all = check_bounds_all<Q>(tr, shares, tol);
        const std::string label = " " + set_label(c, shares);
        for (auto* rep : {&all.departures, &all.backlog, &all.output}) {
            rep->name += label;
            ok = note(c, *rep) && ok;
        }
    }
    return ok;
}

inline int cmd_bounds(const Context& c) {
    auto tr = simulate(c.sf.scenario());
    return check_bounds(c, tr, default_share_sets(c)) ? pass : violation;
}

inline int cmd_verify(const Context& c) {
    const Q tol = c.tolerance();
    bool ok = true;
    auto line = [&](const std::string& name, bool good, const std::string& detail) {
        c.err << name << ": " << (good ? "pass" : "FAIL") << " (" << detail << ")\n";
        ok = ok && good;
    };
    const auto grid = c.grid();
    const std::size_t n = c.sf.flows.size();

    // closed-form curves against subset enumeration
    if (n <= OracleConfig<Q>{}.max_enumeration) {
        auto uni = universal<Q>(c.sf.flows, c.sf.curve);
        Q worst(0);
        std::size_t checks = 0;
        bool good = true;
        for (const auto& t : grid) {
            if (!(t > 0)) continue;
            AllocationProblem<Q> p;
            p.weights = weights_of<Q>(c.sf.flows);
            for (const auto& f : c.sf.flows) p.requests.push_back(f.envelope(t));
            p.resource = c.sf.curve(t);
            extended<Q> brute = fair_share_bruteforce(p), fast = uni(t);
            ++checks;
            if (brute.is_finite() != fast.is_finite()) {
                good = false;
            } else if (brute.is_finite()) {
                worst = max_value(worst, abs_value(Q(brute.value() - fast.value())));
            }
        }
        line("universal-vs-enumeration", good && !(worst > tol), std::to_string(checks) + " times, worst gap " + to_decimal(worst));
        for (auto i : c.flows_of_interest()) {
            auto left = leftover<Q>(c.sf.flows, i, c.sf.curve);
            Q gap(0);
            for (const auto& t : grid) gap = max_value(gap, abs_value(Q(left(t) - leftover_bruteforce<Q>(c.sf.flows, c.sf.curve, i, t))));
            line("leftover-vs-enumeration " + c.sf.flows[i].id, !(gap > tol), std::to_string(grid.size()) + " times, worst gap " + to_decimal(gap));
        }
    } else {
        c.err << "enumeration checks skipped: more than " << OracleConfig<Q>{}.max_enumeration << " flows\n";
    }

    bool simulatable = c.sf.process && c.sf.horizon &&
                       std::all_of(c.sf.flows.begin(), c.sf.flows.end(), [](const auto& f) { return f.arrivals.has_value(); });
    if (!simulatable) {
        c.err << "trajectory checks skipped: scenario has no arrivals, process or horizon\n";
        return ok ? pass : violation;
    }
    const auto scenario = c.sf.scenario();
    auto tr = simulate(scenario);
    ok = note(c, gps_compliance<Q>(tr, tr.weights, tol)) && ok;
    line("drain-events-per-segment", tr.max_drains_per_segment() <= n,
         "max " + std::to_string(tr.max_drains_per_segment()) + " for " + std::to_string(n) + " flows");

    // the fixed-step recursion is exact at its own grid points
    auto stepped = simulate_euler(scenario, Q(*c.sf.horizon / 64));
    Q grid_gap(0);
    for (const auto& t : stepped.grid)
        for (std::size_t j = 0; j < n; ++j)
            grid_gap = max_value(grid_gap, abs_value(Q(tr.backlog(j, t) - stepped.backlog(j, t))));
    line("fixed-step-agreement", !(grid_gap > tol), std::to_string(stepped.grid.size()) + " steps, worst gap " + to_decimal(grid_gap));

    bool greedy_lazy_case = c.sf.process_kind == "lazy" &&
                            std::all_of(c.sf.arrival_kinds.begin(), c.sf.arrival_kinds.end(), [](const auto& k) { return k == "greedy"; });
    if (greedy_lazy_case) {
        auto closed = greedy_lazy<Q>(c.sf.flows, c.sf.curve);
        Q gap(0);
        for (const auto& t : tr.grid)
            for (std::size_t j = 0; j < n; ++j) gap = max_value(gap, abs_value(Q(tr.departures[j](t) - closed[j](t))));
        line("greedy-lazy-closed-form", !(gap > tol), std::to_string(tr.grid.size()) + " times, worst gap " + to_decimal(gap));
    }

    ok = check_bounds(c, tr, default_share_sets(c)) && ok;

    // random feasible subsets, one summary line per bound
    std::mt19937_64 rng(c.opt.seed);
    const auto weights = weights_of<Q>(c.sf.flows);
    const std::string label = " random x20 (seed " + std::to_string(c.opt.seed) + ")";
    BoundReport<Q> t2, bl, ob;
    t2.name = "departure-lower-bound" + label;
    bl.name = "backlog-bound" + label;
    ob.name = "output-burstiness-bound" + label;
    t2.tolerance = bl.tolerance = ob.tolerance = tol;
    for (int k = 0; k < 20; ++k) {
        auto shares = random_feasible_shares<Q>(weights, rng);
        auto all = check_bounds_all<Q>(tr, shares, tol);
        t2.merge(all.departures);
        bl.merge(all.backlog);
        ob.merge(all.output);
    }
    ok = note(c, t2) && ok;
    ok = note(c, bl) && ok;
    ok = note(c, ob) && ok;
    return ok ? pass : violation;
}

inline int cmd_sample(const Context& c) {
    const auto grid = c.grid();
    const auto idx = c.flows_of_interest();
    auto uni = universal<Q>(c.sf.flows, c.sf.curve);
    std::vector<ServiceCurve<Q>> left;
    for (auto i : idx) left.push_back(leftover<Q>(c.sf.flows, i, c.sf.curve));
    std::string csv = "t";
    for (auto i : idx) csv += ",E_" + c.sf.flows[i].id;
    csv += ",service,universal";
    for (auto i : idx) csv += ",S_" + c.sf.flows[i].id;
    csv += "\n";
    for (const auto& t : grid) {
        csv += to_decimal(t);
        for (auto i : idx) csv += "," + to_decimal(c.sf.flows[i].envelope(t));
        csv += "," + to_decimal(c.sf.curve(t)) + "," + to_decimal(uni(t));
        for (const auto& s : left) csv += "," + to_decimal(s(t));
        csv += "\n";
    }
    c.artifact("sample.csv", csv);
    return pass;
}

}  // namespace detail

/// Runs one command on a parsed scenario.
inline int run(const std::string& command, const io::ScenarioFile& sf, const Options& opt, std::ostream& out,
               std::ostream& err) {
    detail::Context c{sf, opt, out, err};
    try {
        if (command == "leftover") return detail::cmd_leftover(c);
        if (command == "universal") return detail::cmd_universal(c);
        if (command == "simulate") return detail::cmd_simulate(c);
        if (command == "bounds") return detail::cmd_bounds(c);
        if (command == "verify") return detail::cmd_verify(c);
        if (command == "sample") return detail::cmd_sample(c);
        err << "unknown command '" << command << "'\n";
        return usage;
    } catch (const io::ScenarioError& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    }
}

/// Parses the command line `gpscurve <command> <scenario.json> [flags]` and runs it.
inline int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"GPS leftover service curves, fluid simulation and bound checks", "gpscurve"};
    std::string command, path;
    Options opt;
    app.add_option("command", command, "leftover | universal | simulate | bounds | verify | sample")
        ->required()
        ->check(CLI::IsMember(commands()));
    app.add_option("scenario", path, "scenario JSON file")->required();
    app.add_option("--flow", opt.flow, "flow id");
    app.add_option("--grid", opt.grid, "sample times: t0:t1:step or a comma-separated list");
    app.add_option("--tolerance", opt.tolerance, "allowed negative slack (rational)");
    app.add_option("--seed", opt.seed, "seed for the randomized checks of verify");
    app.add_option("--out", opt.out_dir, "directory for CSV artifacts (default: stdout)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? pass : usage;
    }
    try {
        return run(command, io::parse_scenario(path), opt, out, err);
    } catch (const io::ScenarioError& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    }
}

}  // namespace gps::cli
