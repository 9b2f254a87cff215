#pragma once

// Slow reference implementations: literal subset enumeration for the fair
// share and the leftover curve, and a fixed-step simulation.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "gps/curves.hpp"
#include "gps/maxmin.hpp"
#include "gps/simulator.hpp"

namespace gps {

template <class T>
struct OracleConfig {
    std::size_t max_enumeration = 12;
    T dt{T(1) / 100};

    void validate() const {
        if (max_enumeration > 20) throw std::invalid_argument("OracleConfig: enumeration size above 20");
        if (!(dt > T(0))) throw std::invalid_argument("OracleConfig: dt must be positive");
    }
};

/// max over all subsets M of (X - sum_M x_j) / sum_{not M} phi_j, where the
/// full set contributes -inf or +inf by the sign of its numerator.
template <class T>
extended<T> fair_share_bruteforce(const AllocationProblem<T>& p, const OracleConfig<T>& cfg = {}) {
    cfg.validate();
    p.validate();
    const std::size_t n = p.size();
    if (n > cfg.max_enumeration) throw std::invalid_argument("fair_share_bruteforce: too many players");
    // subset sums built from the subset without its lowest member
    const std::uint32_t subsets = std::uint32_t{1} << n;
    std::vector<extended<T>> taken(subsets, extended<T>(T(0)));
    std::vector<T> left_out(subsets, T(0));
    for (std::size_t j = 0; j < n; ++j) left_out[0] += p.weights[j];
    extended<T> best = extended<T>::neg_inf();
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
        if (mask != 0) {
            const std::uint32_t rest = mask & (mask - 1);
            const auto j = static_cast<std::size_t>(std::countr_zero(mask));
            taken[mask] = taken[rest] + p.requests[j];
            left_out[mask] = left_out[rest] - p.weights[j];
        }
        const extended<T> numerator = extended<T>(p.resource) - taken[mask];
        extended<T> value;
        if (mask == subsets - 1)
            value = numerator < extended<T>(T(0)) ? extended<T>::neg_inf() : extended<T>::pos_inf();
        else
            value = numerator / left_out[mask];
        best = max_value(best, value);
    }
    return best;
}

/// max over M within the other flows of phi_i / sum_{not M} phi_j * (C(t) - sum_M E_j(t)).
template <class T>
T leftover_bruteforce(std::span<const FlowSpec<T>> flows, const ServiceCurve<T>& service, std::size_t i, const T& t,
                      const OracleConfig<T>& cfg = {}) {
    cfg.validate();
    const std::size_t n = flows.size();
    if (i >= n) throw std::out_of_range("leftover_bruteforce: unknown flow");
    if (n > cfg.max_enumeration) throw std::invalid_argument("leftover_bruteforce: too many flows");
    const T ct = service(t);
    T best(0);
    bool any = false;
    for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << n); ++mask) {
        if (mask >> i & 1U) continue;
        T rest = ct, weight(0);
        bool bounded = true;
        for (std::size_t j = 0; j < n; ++j) {
            if (mask >> j & 1U) {
                extended<T> e = flows[j].envelope(t);
                if (!e.is_finite()) {
                    bounded = false;
                    break;
                }
                rest -= e.value();
            } else {
                weight += flows[j].weight;
            }
        }
        if (!bounded) continue;
        T value = flows[i].weight / weight * rest;
        if (!any || value > best) best = value;
        any = true;
    }
    return best;
}

/// Fixed-step simulation: each step of length at most dt lies inside one
/// input segment and applies the unmet-demand recursion with requests
/// B_j + A_j(s,t) and resource C(s,t). Jumps go through apply_jump.
template <class T>
Trajectory<T> simulate_euler(const Scenario<T>& s, const T& dt) {
    s.validate();
    if (!(dt > T(0))) throw std::invalid_argument("simulate_euler: dt must be positive");
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

    std::vector<T> backlog(n, T(0)), da(n);
    std::vector<std::vector<Segment<T>>> dep(n);
    for (std::size_t k = 0; k + 1 < stops.size(); ++k) {
        const T& b = stops[k];
        const T& next = stops[k + 1];
        for (std::size_t j = 0; j < n; ++j) da[j] = tr.arrivals[j].jump_at(b);
        auto jump = apply_jump<T>(backlog, da, tr.service.jump_at(b), tr.weights);
        backlog = jump.backlogs;
        std::vector<T> pending = jump.departures;
        tr.events.push_back({b, EventKind::breakpoint, {}});

        T t = b;
        while (t < next) {
            T t_new = t + dt;
            if (!(t_new < next)) t_new = next;
            const T h = t_new - t;
            AllocationProblem<T> p;
            p.weights = tr.weights;
            for (std::size_t j = 0; j < n; ++j)
                p.requests.emplace_back(T(backlog[j] + tr.arrivals[j].right_slope(t) * h));
            p.resource = tr.service.right_slope(t) * h;
            auto r = allocate(p);
            for (std::size_t j = 0; j < n; ++j) {
                dep[j].push_back({t, pending[j], T(r.shares[j] / h)});
                pending[j] = T(0);
                backlog[j] = detail::snap_nonnegative(r.unmet[j].value(), p.requests[j].value());
            }
            tr.grid.push_back(t);
            t = t_new;
        }
    }
    tr.grid.push_back(s.horizon);
    for (std::size_t j = 0; j < n; ++j) {
        dep[j].push_back({s.horizon, T(0), T(0)});
        tr.departures.emplace_back(std::move(dep[j]));
    }
    return tr;
}

/// sup over [0, horizon] of sum_j |B_j - B'_j| for two trajectories of the
/// same scenario. Both backlogs are piecewise affine on the merged grid, so
/// grid values and right limits suffice.
template <class T>
T backlog_gap(const Trajectory<T>& a, const Trajectory<T>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("backlog_gap: flow counts differ");
    std::vector<T> times = a.grid;
    times.insert(times.end(), b.grid.begin(), b.grid.end());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    T gap(0);
    for (const auto& t : times) {
        T left(0), right(0);
        for (std::size_t j = 0; j < a.size(); ++j) {
            left += abs_value(T(a.backlog(j, t) - b.backlog(j, t)));
            if (t < a.horizon) right += abs_value(T(a.backlog_after(j, t) - b.backlog_after(j, t)));
        }
        gap = max_value(gap, max_value(left, right));
    }
    return gap;
}

/// sup over t of sum_j |B_j(t) - B^h_j(t)|, where B^h holds the fixed-step
/// backlog B^h_j(t_k+) on each step (t_k, t_{k+1}]. `exact` must be affine
/// between its grid points.
template <class T>
T euler_hold_gap(const Trajectory<T>& exact, const Trajectory<T>& stepped) {
    if (exact.size() != stepped.size()) throw std::invalid_argument("euler_hold_gap: flow counts differ");
    const std::size_t n = exact.size();
    T gap(0);
    auto distance = [&](const std::vector<T>& held, const T& t, bool right) {
        T sum(0);
        for (std::size_t j = 0; j < n; ++j)
            sum += abs_value(T((right ? exact.backlog_after(j, t) : exact.backlog(j, t)) - held[j]));
        return sum;
    };
    std::size_t g = 0;
    std::vector<T> held(n);
    for (std::size_t k = 0; k + 1 < stepped.grid.size(); ++k) {
        const T& a = stepped.grid[k];
        const T& b = stepped.grid[k + 1];
        for (std::size_t j = 0; j < n; ++j) held[j] = stepped.backlog_after(j, a);
        gap = max_value(gap, distance(held, a, true));
        gap = max_value(gap, distance(held, b, false));
        while (g < exact.grid.size() && !(exact.grid[g] > a)) ++g;
        for (std::size_t m = g; m < exact.grid.size() && exact.grid[m] < b; ++m) {
            gap = max_value(gap, distance(held, exact.grid[m], false));
            gap = max_value(gap, distance(held, exact.grid[m], true));
        }
    }
    return gap;
}

}  // namespace gps
