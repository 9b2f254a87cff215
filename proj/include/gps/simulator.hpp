#pragma once

// Event-driven GPS fluid simulation over piecewise-linear arrival and
// service processes. Between consecutive input breakpoints all rates are
// constant, so the backlog of every flow is affine until either the next
// breakpoint or the instant some backlogged flow empties.

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gps/curves.hpp"
#include "gps/maxmin.hpp"
#include "gps/plf.hpp"
#include "gps/report.hpp"

namespace gps {

template <class T>
struct Scenario {
    std::vector<FlowSpec<T>> flows;
    Plf<T> service;
    T horizon{1};

    void validate() const {
        if (!(horizon > T(0))) throw std::invalid_argument("scenario: horizon must be positive");
        if (flows.empty()) throw std::invalid_argument("scenario: no flows");
        for (const auto& f : flows) {
            f.validate(false);
            if (!f.arrivals) throw std::invalid_argument("scenario: flow '" + f.id + "' has no arrivals");
        }
    }
};

enum class EventKind { breakpoint, drain };

template <class T>
struct Event {
    T time;
    EventKind kind;
    std::vector<std::size_t> idle;  // flows without backlog on the following piece
};

template <class T>
struct Trajectory {
    std::vector<T> weights;
    std::vector<Plf<T>> arrivals;
    std::vector<Plf<T>> departures;
    Plf<T> service;
    T horizon{0};
    std::vector<T> grid;               // every process is affine between neighbours
    std::vector<T> input_breakpoints;  // breakpoints of the inputs in [0, horizon)
    std::vector<Event<T>> events;

    std::size_t size() const { return weights.size(); }

    T backlog(std::size_t j, const T& t) const { return arrivals[j](t) - departures[j](t); }
    T backlog_after(std::size_t j, const T& t) const { return arrivals[j].right_limit(t) - departures[j].right_limit(t); }

    /// Trajectory from given departures; the grid is the union of all breakpoints.
    static Trajectory from_departures(std::vector<T> weights, std::vector<Plf<T>> arrivals,
                                      std::vector<Plf<T>> departures, Plf<T> service, const T& horizon) {
        if (weights.size() != arrivals.size() || weights.size() != departures.size())
            throw std::invalid_argument("Trajectory: size mismatch");
        Trajectory tr{std::move(weights), std::move(arrivals), std::move(departures), std::move(service), horizon, {}, {}, {}};
        std::vector<T> inputs = tr.service.breakpoints();
        for (const auto& a : tr.arrivals)
            for (const auto& t : a.breakpoints()) inputs.push_back(t);
        std::vector<T> all = inputs;
        for (const auto& d : tr.departures)
            for (const auto& t : d.breakpoints()) all.push_back(t);
        auto clip = [&](std::vector<T>& v) {
            v.erase(std::remove_if(v.begin(), v.end(), [&](const T& t) { return !(t < horizon); }), v.end());
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        };
        clip(inputs);
        clip(all);
        all.push_back(horizon);
        tr.grid = std::move(all);
        tr.input_breakpoints = std::move(inputs);
        return tr;
    }

    /// Maximal intervals (as grid index pairs) on which flow j is backlogged.
    /// A flow is backlogged at t when both B_j(t) and B_j(t+) are positive, so
    /// a service jump that empties the flow ends the interval.
    std::vector<std::pair<std::size_t, std::size_t>> backlogged_intervals(std::size_t j, const T& tolerance) const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
            T mid = (grid[k] + grid[k + 1]) / 2;
            if (!(backlog(j, mid) > tolerance)) continue;
            if (!out.empty() && out.back().second == k && backlog(j, grid[k]) > tolerance &&
                backlog_after(j, grid[k]) > tolerance)
                out.back().second = k + 1;
            else
                out.emplace_back(k, k + 1);
        }
        return out;
    }

    /// Largest number of drain events strictly between two input breakpoints.
    std::size_t max_drains_per_segment() const {
        std::size_t best = 0, current = 0;
        for (const auto& e : events) {
            if (e.kind == EventKind::breakpoint) {
                current = 0;
            } else {
                best = std::max(best, ++current);
            }
        }
        return best;
    }
};

template <class T>
struct JumpResult {
    std::vector<T> backlogs;
    std::vector<T> departures;
};

namespace detail {

// Floating scalars: clamp values that are zero up to rounding.
template <class T>
T snap_nonnegative(const T& v, const T& scale) {
    if constexpr (scalar_traits<T>::exact) {
        return v;
    } else {
        return v <= scalar_traits<T>::eps() * max_value(T(1), abs_value(scale)) ? T(0) : v;
    }
}

}  // namespace detail

/// Instantaneous allocation of a service jump among backlogs plus arrival jumps.
template <class T>
JumpResult<T> apply_jump(std::span<const T> backlogs, std::span<const T> arrival_jumps, const T& service_jump,
                         std::span<const T> weights) {
    const std::size_t n = weights.size();
    if (backlogs.size() != n || arrival_jumps.size() != n) throw std::invalid_argument("apply_jump: size mismatch");
    AllocationProblem<T> p;
    p.weights.assign(weights.begin(), weights.end());
    for (std::size_t j = 0; j < n; ++j) p.requests.emplace_back(T(backlogs[j] + arrival_jumps[j]));
    p.resource = service_jump;
    auto r = allocate(p);
    JumpResult<T> out;
    for (std::size_t j = 0; j < n; ++j) {
        out.departures.push_back(r.shares[j]);
        out.backlogs.push_back(detail::snap_nonnegative(r.unmet[j].value(), p.requests[j].value()));
    }
    return out;
}

template <class T>
struct SegmentRates {
    std::vector<T> departure_rates;
    extended<T> next_event_dt = extended<T>::pos_inf();
    std::vector<std::size_t> draining;  // flows that empty after next_event_dt
};

/// Departure rates for the current backlog state: backlogged flows request
/// +inf, empty flows request their arrival rate.
template <class T>
SegmentRates<T> segment_rates(std::span<const T> backlogs, std::span<const T> arrival_rates, const T& service_rate,
                              std::span<const T> weights) {
    const std::size_t n = weights.size();
    if (backlogs.size() != n || arrival_rates.size() != n) throw std::invalid_argument("segment_rates: size mismatch");
    AllocationProblem<T> p;
    p.weights.assign(weights.begin(), weights.end());
    for (std::size_t j = 0; j < n; ++j)
        p.requests.push_back(backlogs[j] > T(0) ? extended<T>::pos_inf() : extended<T>(arrival_rates[j]));
    p.resource = service_rate;
    auto r = allocate(p);

    SegmentRates<T> out;
    out.departure_rates = r.shares;
    std::vector<T> dts(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (!(backlogs[j] > T(0))) continue;
        T drain_rate = r.shares[j] - arrival_rates[j];
        if (!(drain_rate > T(0))) continue;
        dts[j] = backlogs[j] / drain_rate;
        extended<T> dt(dts[j]);
        if (dt < out.next_event_dt) out.next_event_dt = dt;
    }
    if (out.next_event_dt.is_finite()) {
        for (std::size_t j = 0; j < n; ++j)
            if (backlogs[j] > T(0) && r.shares[j] > arrival_rates[j] && approx_eq(dts[j], out.next_event_dt.value()))
                out.draining.push_back(j);
    }
    return out;
}

namespace detail {

template <class T>
std::vector<T> input_breakpoints(const std::vector<const Plf<T>*>& inputs, const T& horizon) {
    std::vector<T> bps{T(0)};
    for (const auto* f : inputs)
        for (const auto& t : f->breakpoints())
            if (t < horizon) bps.push_back(t);
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    return bps;
}

}  // namespace detail

template <class T>
Trajectory<T> simulate(const Scenario<T>& s) {
    s.validate();
    const std::size_t n = s.flows.size();
    Trajectory<T> tr;
    tr.weights = weights_of<T>(s.flows);
    for (const auto& f : s.flows) tr.arrivals.push_back(*f.arrivals);
    tr.service = s.service;
    tr.horizon = s.horizon;

    std::vector<const Plf<T>*> inputs{&tr.service};
    for (const auto& a : tr.arrivals) inputs.push_back(&a);
    tr.input_breakpoints = detail::input_breakpoints(inputs, s.horizon);
    std::vector<T> stops = tr.input_breakpoints;
    stops.push_back(s.horizon);

    std::vector<T> backlog(n, T(0));
    std::vector<std::vector<Segment<T>>> dep(n);
    std::vector<T> a(n), da(n);

    for (std::size_t k = 0; k + 1 < stops.size(); ++k) {
        const T& b = stops[k];
        const T& next = stops[k + 1];
        for (std::size_t j = 0; j < n; ++j) {
            da[j] = tr.arrivals[j].jump_at(b);
            a[j] = tr.arrivals[j].right_slope(b);
        }
        auto jump = apply_jump<T>(backlog, da, tr.service.jump_at(b), tr.weights);
        backlog = jump.backlogs;
        std::vector<T> pending = jump.departures;
        const T c = tr.service.right_slope(b);

        T t = b;
        EventKind kind = EventKind::breakpoint;
        while (t < next) {
            auto rates = segment_rates<T>(backlog, a, c, tr.weights);
            Event<T> ev{t, kind, {}};
            for (std::size_t j = 0; j < n; ++j)
                if (backlog[j] == T(0) && approx_eq(rates.departure_rates[j], a[j])) ev.idle.push_back(j);
            tr.events.push_back(std::move(ev));
            tr.grid.push_back(t);

            bool drain = false;
            T t_new = next;
            if (rates.next_event_dt.is_finite()) {
                T cand = t + rates.next_event_dt.value();
                if (cand < next && !approx_eq(cand, next)) {
                    drain = true;
                    t_new = cand;
                }
            }
            if (drain && !(t_new > t)) {  // rounding left a vanishing backlog
                for (auto j : rates.draining) backlog[j] = T(0);
                tr.events.pop_back();
                tr.grid.pop_back();
                continue;
            }
            const T h = t_new - t;
            for (std::size_t j = 0; j < n; ++j) {
                dep[j].push_back({t, pending[j], rates.departure_rates[j]});
                pending[j] = T(0);
                backlog[j] += (a[j] - rates.departure_rates[j]) * h;
                backlog[j] = detail::snap_nonnegative(backlog[j], tr.arrivals[j](t_new));
            }
            if (drain)
                for (auto j : rates.draining) backlog[j] = T(0);
            for (std::size_t j = 0; j < n; ++j)
                if (backlog[j] < T(0)) throw std::logic_error("simulate: negative backlog");
            t = t_new;
            kind = EventKind::drain;
        }
    }
    tr.grid.push_back(s.horizon);
    for (std::size_t j = 0; j < n; ++j) {
        dep[j].push_back({s.horizon, T(0), T(0)});
        tr.departures.emplace_back(std::move(dep[j]));
    }
    return tr;
}

/// Checks the GPS definition on a trajectory: work conservation and, for
/// every flow backlogged on a piece, D_i/phi_i >= D_j/phi_j over that piece
/// (and over jumps it is backlogged after). Checking per piece suffices
/// because increments are additive and affine within pieces.
template <class T>
BoundReport<T> gps_compliance(const Trajectory<T>& tr, std::span<const T> weights, const T& tolerance = T(0)) {
    BoundReport<T> rep;
    rep.name = "gps-compliance";
    rep.tolerance = tolerance;
    const std::size_t n = tr.size();
    if (weights.size() != n) throw std::invalid_argument("gps_compliance: weights size mismatch");
    auto witness = [](const T& s, const T& t, std::vector<std::size_t> flows, std::string what) {
        return Witness<T>{s, t, std::move(flows), std::move(what)};
    };
    for (std::size_t k = 0; k + 1 < tr.grid.size(); ++k) {
        const T& g = tr.grid[k];
        const T& g_next = tr.grid[k + 1];

        // jumps at g
        T requested(0), served(0);
        std::vector<T> dd(n);
        for (std::size_t j = 0; j < n; ++j) {
            dd[j] = tr.departures[j].jump_at(g);
            requested += tr.backlog(j, g) + tr.arrivals[j].jump_at(g);
            served += dd[j];
            rep.record_with(tr.backlog(j, g), [&] { return witness(g, g, {j}, "departures exceed arrivals"); });
            rep.record_with(tr.backlog_after(j, g), [&] { return witness(g, g, {j}, "departures exceed arrivals"); });
        }
        T jump_target = min_value(requested, tr.service.jump_at(g));
        rep.record_with(T(-abs_value(T(served - jump_target))), [&] { return witness(g, g, {}, "jump not work-conserving"); });
        for (std::size_t i = 0; i < n; ++i) {
            if (!(tr.backlog_after(i, g) > tolerance)) continue;
            for (std::size_t j = 0; j < n; ++j)
                rep.record_with(T(dd[i] / weights[i] - dd[j] / weights[j]), [&] { return witness(g, g, {i, j}, "weighted share at jump"); });
        }

        // rates on (g, g_next)
        T mid = (g + g_next) / 2;
        T total_rate(0), total_backlog(0);
        std::vector<T> r(n);
        std::vector<bool> busy(n);
        for (std::size_t j = 0; j < n; ++j) {
            r[j] = tr.departures[j].right_slope(g);
            total_rate += r[j];
            busy[j] = tr.backlog(j, mid) > tolerance;
            total_backlog += tr.backlog(j, mid);
        }
        T c = tr.service.right_slope(g);
        if (total_backlog > tolerance)
            rep.record_with(T(-abs_value(T(total_rate - c))), [&] { return witness(g, g_next, {}, "idling while backlogged"); });
        else
            rep.record_with(T(c - total_rate), [&] { return witness(g, g_next, {}, "serving above capacity"); });
        for (std::size_t i = 0; i < n; ++i) {
            if (!busy[i]) continue;
            for (std::size_t j = 0; j < n; ++j)
                rep.record_with(T(r[i] / weights[i] - r[j] / weights[j]), [&] { return witness(g, g_next, {i, j}, "weighted share"); });
        }
    }
    return rep;
}

}  // namespace gps
