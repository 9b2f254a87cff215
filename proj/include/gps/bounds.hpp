#pragma once

// Departure lower bounds for feasible subsets, the backlog and output
// burstiness bounds derived from them, and a strict service curve checker.
// All infima and suprema range over the finite sets of breakpoints where
// the piecewise-affine objectives attain them.

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gps/curves.hpp"
#include "gps/maxmin.hpp"
#include "gps/plf.hpp"
#include "gps/report.hpp"
#include "gps/simulator.hpp"

namespace gps {

namespace detail {

// Breakpoints of f and g in [0, t], plus 0.
template <class T>
std::vector<T> candidates_upto(const Plf<T>& f, const Plf<T>& g, const T& t) {
    std::vector<T> out{T(0)};
    for (const auto* h : {&f, &g})
        for (const auto& b : h->breakpoints())
            if (b <= t) out.push_back(b);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace detail

/// A time t, or the instant just after t (right limits of left-continuous processes).
template <class T>
struct Instant {
    T time;
    detail::Side side = detail::Side::value;
};

/// sup_{r <= t} { A(r,t) - x C(r,t) } at an instant.
template <class T>
T b_star(const Plf<T>& arrivals, const T& x, const Plf<T>& service, const Instant<T>& at) {
    using detail::Side;
    const T& t = at.time;
    if (t < T(0)) throw std::invalid_argument("b_star: negative time");
    if (x < T(0) || x > T(1)) throw std::invalid_argument("b_star: share must lie in [0, 1]");
    const T a_t = detail::side_value(arrivals, t, at.side), c_t = detail::side_value(service, t, at.side);
    T best(0);  // r = t
    for (const auto& r : detail::candidates_upto(arrivals, service, t)) {
        best = max_value(best, T(a_t - arrivals(r) - x * (c_t - service(r))));
        if (r < t || at.side == Side::right)
            best = max_value(best, T(a_t - arrivals.right_limit(r) - x * (c_t - service.right_limit(r))));
    }
    return best;
}

template <class T>
T b_star(const Plf<T>& arrivals, const T& x, const Plf<T>& service, const T& t) {
    return b_star(arrivals, x, service, Instant<T>{t});
}

/// sigma + rho L, valid for token-bucket arrivals on a latency-rate link when rho <= x R.
template <class T>
T b_star_affine_bound(const T& sigma, const T& rho, const T& x, const T& rate, const T& latency) {
    if (sigma < T(0) || rho < T(0) || latency < T(0) || rate < T(0))
        throw std::invalid_argument("b_star_affine_bound: parameters must be nonnegative");
    if (rho > x * rate) throw std::invalid_argument("b_star_affine_bound: requires rho <= x R");
    return sigma + rho * latency;
}

namespace detail {

template <class T>
void require_feasible(std::size_t n, std::span<const T> weights, std::span<const Request<T>> shares) {
    if (weights.size() != n) throw std::invalid_argument("bounds: weights size mismatch");
    for (const auto& r : shares)
        if (r.player >= n) throw std::out_of_range("bounds: unknown flow " + std::to_string(r.player));
    if (!is_feasible(weights, shares, T(1)))
        throw std::invalid_argument("bounds: shares are not a feasible subset for resource 1");
}

template <class T>
std::vector<std::size_t> players_of(std::span<const Request<T>> shares) {
    std::vector<std::size_t> out;
    for (const auto& r : shares) out.push_back(r.player);
    return out;
}

// Instants where the bound checks attain their extremes, in time order.
// Every breakpoint of A_j and C is a grid point, so h_j = A_j - x_j C is
// affine between grid points and B*_j(t) = h_j(t) - inf_{r <= t} h_j(r) is
// a running minimum over grid values and right limits. On a grid piece
// (g, g') every B*_j is max{B*_j(g+) + (a_j - x_j c)(t - g), 0}, so the
// candidates are g, g+, the zero crossings inside the piece, and g'.
template <class T>
struct SweepPoint {
    Instant<T> at;
    T b_star;    // sum_M B*_j
    T arrived;   // sum_M A_j
    T departed;  // sum_M D_j
    T service;   // C
};

template <class T>
std::vector<SweepPoint<T>> bound_sweep(const Trajectory<T>& tr, std::span<const Request<T>> shares) {
    const std::size_t m = shares.size();
    std::vector<T> low(m), excess(m);
    std::vector<SweepPoint<T>> out;
    // `advance` folds h_j at this instant into the running minimum
    auto visit = [&](const T& t, Side side, bool advance) {
        SweepPoint<T> p{{t, side}, T(0), T(0), T(0), side_value(tr.service, t, side)};
        for (std::size_t k = 0; k < m; ++k) {
            const auto& r = shares[k];
            const T a = side_value(tr.arrivals[r.player], t, side);
            const T h = a - r.amount * p.service;
            const T lo = out.empty() ? h : min_value(low[k], h);
            if (advance) low[k] = lo;
            excess[k] = h - lo;
            p.b_star += excess[k];
            p.arrived += a;
            p.departed += side_value(tr.departures[r.player], t, side);
        }
        out.push_back(std::move(p));
    };
    for (std::size_t g = 0; g + 1 < tr.grid.size(); ++g) {
        const T& t0 = tr.grid[g];
        const T& t1 = tr.grid[g + 1];
        visit(t0, Side::value, true);
        visit(t0, Side::right, true);
        std::vector<T> kinks;
        const T c = tr.service.right_slope(t0);
        for (std::size_t k = 0; k < m; ++k) {
            const auto& r = shares[k];
            T decay = r.amount * c - tr.arrivals[r.player].right_slope(t0);
            if (!(decay > T(0))) continue;
            T t = t0 + excess[k] / decay;
            if (t0 < t && t < t1) kinks.push_back(t);
        }
        std::sort(kinks.begin(), kinks.end());
        kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());
        for (const auto& t : kinks) visit(t, Side::value, false);
    }
    visit(tr.grid.back(), Side::value, true);
    return out;
}

template <class T>
std::string instant_label(const Instant<T>& at) {
    return at.side == Side::right ? "just after t" : "";
}

}  // namespace detail

/// sum_M D_j(t) >= sum_M inf_{s<=t} { A_j(s) + x_j C(s,t) } for a feasible
/// subset of shares (x_j) with resource 1. The infimum equals A_j(t) - B*_j(t).
template <class T>
BoundReport<T> check_theorem2(const Trajectory<T>& tr, std::span<const Request<T>> shares, const Instant<T>& at,
                              const T& tolerance = T(0)) {
    detail::require_feasible<T>(tr.size(), tr.weights, shares);
    BoundReport<T> rep;
    rep.name = "departure-lower-bound";
    rep.tolerance = tolerance;
    T lhs(0), rhs(0);
    for (const auto& r : shares) {
        lhs += detail::side_value(tr.departures[r.player], at.time, at.side);
        rhs += detail::side_value(tr.arrivals[r.player], at.time, at.side) -
               b_star(tr.arrivals[r.player], r.amount, tr.service, at);
    }
    rep.record(T(lhs - rhs), Witness<T>{at.time, at.time, detail::players_of(shares), detail::instant_label(at)});
    return rep;
}

template <class T>
BoundReport<T> check_theorem2(const Trajectory<T>& tr, std::span<const Request<T>> shares, const T& t,
                              const T& tolerance = T(0)) {
    return check_theorem2(tr, shares, Instant<T>{t}, tolerance);
}

template <class T>
struct CorollaryReport {
    BoundReport<T> backlog;
    BoundReport<T> output;

    bool pass() const { return backlog.pass() && output.pass(); }
};

/// sum_M B_j(t) <= sum_M B*_j(t) and sum_M D_j(s,t) <= sum_M (B*_j(t) + x_j C(s,t)).
template <class T>
CorollaryReport<T> check_corollaries(const Trajectory<T>& tr, std::span<const Request<T>> shares, const T& s,
                                     const T& t, const T& tolerance = T(0)) {
    detail::require_feasible<T>(tr.size(), tr.weights, shares);
    if (s < T(0) || t < s) throw std::invalid_argument("check_corollaries: need 0 <= s <= t");
    CorollaryReport<T> rep;
    rep.backlog.name = "backlog-bound";
    rep.output.name = "output-burstiness-bound";
    rep.backlog.tolerance = rep.output.tolerance = tolerance;
    T backlog(0), out(0), bstar(0), share_service(0);
    const T cst = tr.service.range(s, t);
    for (const auto& r : shares) {
        backlog += tr.backlog(r.player, t);
        out += tr.departures[r.player].range(s, t);
        bstar += b_star(tr.arrivals[r.player], r.amount, tr.service, t);
        share_service += r.amount * cst;
    }
    auto players = detail::players_of(shares);
    rep.backlog.record(T(bstar - backlog), Witness<T>{t, t, players, {}});
    rep.output.record(T(bstar + share_service - out), Witness<T>{s, t, players, {}});
    return rep;
}

/// Departure lower bound, backlog bound and output burstiness bound for one
/// feasible subset, each checked wherever its slack can be minimal.
template <class T>
struct BoundsReport {
    BoundReport<T> departures;
    BoundReport<T> backlog;
    BoundReport<T> output;

    bool pass() const { return departures.pass() && backlog.pass() && output.pass(); }
};

/// The output slack is B* + x C(t) - D(t) - (x C(s) - D(s)) with sums over M
/// and x the total share, so over all start instants s <= t only the running
/// minimum of x C(s) - D(s) matters. Starts range over every swept instant.
template <class T>
BoundsReport<T> check_bounds_all(const Trajectory<T>& tr, std::span<const Request<T>> shares,
                                 const T& tolerance = T(0)) {
    detail::require_feasible<T>(tr.size(), tr.weights, shares);
    BoundsReport<T> rep;
    rep.departures.name = "departure-lower-bound";
    rep.backlog.name = "backlog-bound";
    rep.output.name = "output-burstiness-bound";
    rep.departures.tolerance = rep.backlog.tolerance = rep.output.tolerance = tolerance;
    const auto players = detail::players_of(shares);
    T share_sum(0);
    for (const auto& r : shares) share_sum += r.amount;

    std::optional<T> low;
    Instant<T> low_at{T(0)};
    for (const auto& p : detail::bound_sweep(tr, shares)) {
        const Instant<T>& at = p.at;
        auto here = [&] { return Witness<T>{at.time, at.time, players, detail::instant_label(at)}; };
        rep.departures.record_with(T(p.departed - p.arrived + p.b_star), here);
        rep.backlog.record_with(T(p.b_star - p.arrived + p.departed), here);

        const T h = share_sum * p.service - p.departed;
        if (!low || h < *low) {
            low = h;
            low_at = at;
        }
        rep.output.record_with(T(p.b_star + h - *low), [&] {
            std::string where = detail::instant_label(at);
            if (low_at.side == detail::Side::right) where += where.empty() ? "just after s" : ", just after s";
            return Witness<T>{low_at.time, at.time, players, where};
        });
    }
    return rep;
}

/// check_theorem2 at every instant where its slack can be minimal.
template <class T>
BoundReport<T> check_theorem2_all(const Trajectory<T>& tr, std::span<const Request<T>> shares,
                                  const T& tolerance = T(0)) {
    return check_bounds_all(tr, shares, tolerance).departures;
}

/// check_corollaries at every instant t where the slack can be minimal and,
/// for the output bound, every start s <= t among those instants.
template <class T>
CorollaryReport<T> check_corollaries_all(const Trajectory<T>& tr, std::span<const Request<T>> shares,
                                         const T& tolerance = T(0)) {
    auto all = check_bounds_all(tr, shares, tolerance);
    return {std::move(all.backlog), std::move(all.output)};
}

/// D_i(s,t) >= S(t-s) for every (s,t) inside a maximal backlogged interval
/// of flow i. Pairs of grid points suffice; s is taken just after its grid
/// point so a departure jump there is not credited.
template <class T>
BoundReport<T> check_strict_service(const Trajectory<T>& tr, std::size_t i, const ServiceCurve<T>& curve,
                                    const T& tolerance = T(0)) {
    if (i >= tr.size()) throw std::out_of_range("check_strict_service: unknown flow " + std::to_string(i));
    BoundReport<T> rep;
    rep.name = "strict-service";
    rep.tolerance = tolerance;
    const auto& d = tr.departures[i];
    std::vector<T> at(tr.grid.size()), after(tr.grid.size());
    for (std::size_t k = 0; k < tr.grid.size(); ++k) {
        at[k] = d(tr.grid[k]);
        after[k] = d.right_limit(tr.grid[k]);
    }
    const T threshold = scalar_traits<T>::exact ? T(0) : tolerance;
    for (auto [p, q] : tr.backlogged_intervals(i, threshold)) {
        for (std::size_t a = p; a < q; ++a) {
            for (std::size_t b = a + 1; b <= q; ++b) {
                rep.record_with(T(at[b] - after[a] - curve(T(tr.grid[b] - tr.grid[a]))),
                                [&] { return Witness<T>{tr.grid[a], tr.grid[b], {i}, {}}; });
            }
        }
    }
    return rep;
}

}  // namespace gps
