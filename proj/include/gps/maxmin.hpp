#pragma once

// Weighted max-min fair allocation of a divisible resource.

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gps/numeric.hpp"

namespace gps {

template <class T>
struct AllocationProblem {
    std::vector<T> weights;                // phi_j > 0
    std::vector<extended<T>> requests;     // x_j >= 0, +inf allowed
    T resource{0};                         // X >= 0

    std::size_t size() const { return weights.size(); }

    void validate() const {
        if (weights.size() != requests.size())
            throw std::invalid_argument("AllocationProblem: weights and requests differ in size");
        for (const auto& w : weights)
            if (!(w > T(0))) throw std::invalid_argument("AllocationProblem: weights must be positive");
        for (const auto& x : requests)
            if (x < extended<T>(T(0))) throw std::invalid_argument("AllocationProblem: negative request");
        if (resource < T(0)) throw std::invalid_argument("AllocationProblem: negative resource");
    }
};

template <class T>
struct AllocationResult {
    extended<T> fair_share;
    std::vector<T> shares;               // y_j = min{x_j, phi_j f}
    std::vector<extended<T>> unmet;      // x_j - y_j
    std::vector<bool> satisfied;         // x_j <= phi_j f

    std::vector<std::size_t> satisfied_set() const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < satisfied.size(); ++j)
            if (satisfied[j]) out.push_back(j);
        return out;
    }
};

/// The water level of the allocation, computed by water-filling: players
/// are visited in increasing order of x_j/phi_j and absorbed while their
/// ratio does not exceed the level of the remaining resource. If every
/// player is absorbed the level is +inf.
template <class T>
extended<T> fair_share(const AllocationProblem<T>& p) {
    p.validate();
    const std::size_t n = p.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<extended<T>> ratio(n);
    for (std::size_t j = 0; j < n; ++j) ratio[j] = p.requests[j] / p.weights[j];
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ratio[a] < ratio[b]; });

    // suffix weight sums avoid cancellation for floating scalars
    std::vector<T> rest_weight(n + 1, T(0));
    for (std::size_t k = n; k-- > 0;) rest_weight[k] = rest_weight[k + 1] + p.weights[order[k]];

    T remaining = p.resource;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& x = p.requests[order[k]];
        const T& w = p.weights[order[k]];
        if (!x.is_finite() || x.value() * rest_weight[k] > remaining * w) return extended<T>(T(remaining / rest_weight[k]));
        remaining -= x.value();
    }
    return extended<T>::pos_inf();
}

template <class T>
AllocationResult<T> allocate(const AllocationProblem<T>& p) {
    AllocationResult<T> r;
    r.fair_share = fair_share(p);
    const std::size_t n = p.size();
    r.shares.resize(n);
    r.unmet.resize(n);
    r.satisfied.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        extended<T> cap = r.fair_share * p.weights[j];
        const auto& x = p.requests[j];
        r.satisfied[j] = x <= cap;
        r.shares[j] = min_value(x, cap).value();
        r.unmet[j] = r.satisfied[j] ? extended<T>(T(0)) : x - extended<T>(r.shares[j]);
    }
    return r;
}

/// f_i, the share player i would receive with an unbounded request. The
/// request x_i is ignored; min{x_i, f_i} is the allocation of player i.
template <class T>
T per_player_share(const AllocationProblem<T>& p, std::size_t i) {
    if (i >= p.size()) throw std::out_of_range("per_player_share: unknown player " + std::to_string(i));
    AllocationProblem<T> q = p;
    q.requests[i] = extended<T>::pos_inf();
    return (fair_share(q) * p.weights[i]).value();
}

/// A request by one player of a subset M.
template <class T>
struct Request {
    std::size_t player;
    T amount;
};

/// Whether (x_j)_{j in M} is a feasible subset of requests for resource X:
/// max_{M} x_j/phi_j <= (X - sum_M x_j) / sum_{not M} phi_j.
template <class T>
bool is_feasible(std::span<const T> weights, std::span<const Request<T>> requests, const T& resource) {
    if (!(resource > T(0))) throw std::invalid_argument("is_feasible: resource must be positive");
    if (requests.empty()) return true;
    std::vector<bool> in_m(weights.size(), false);
    T sum_x(0), max_ratio(0);
    for (const auto& r : requests) {
        if (r.player >= weights.size()) throw std::out_of_range("is_feasible: unknown player");
        if (in_m[r.player]) throw std::invalid_argument("is_feasible: duplicate player");
        if (r.amount < T(0)) throw std::invalid_argument("is_feasible: negative request");
        in_m[r.player] = true;
        sum_x += r.amount;
        max_ratio = max_value(max_ratio, T(r.amount / weights[r.player]));
    }
    T rest_weight(0);
    for (std::size_t j = 0; j < weights.size(); ++j)
        if (!in_m[j]) rest_weight += weights[j];
    if (rest_weight == T(0)) return approx_le(sum_x, resource);
    return approx_le(T(max_ratio * rest_weight), T(resource - sum_x));
}

/// Removal order of a feasible subset: repeatedly drop a player with the
/// largest x_k/phi_k (ties: smallest id). Every remaining downset is feasible.
template <class T>
std::vector<std::size_t> feasible_chain(std::span<const T> weights, std::span<const Request<T>> requests,
                                        const T& resource) {
    if (!is_feasible(weights, requests, resource)) throw std::invalid_argument("feasible_chain: requests are not feasible");
    std::vector<Request<T>> rest(requests.begin(), requests.end());
    std::vector<std::size_t> order;
    while (!rest.empty()) {
        auto pick = std::max_element(rest.begin(), rest.end(), [&](const Request<T>& a, const Request<T>& b) {
            T ra = a.amount / weights[a.player], rb = b.amount / weights[b.player];
            if (ra != rb) return ra < rb;
            return a.player > b.player;
        });
        order.push_back(pick->player);
        rest.erase(pick);
        if (!is_feasible(weights, std::span<const Request<T>>(rest), resource))
            throw std::logic_error("feasible_chain: downset lost feasibility");
    }
    return order;
}

/// Whether `order` is a feasible ordering of all players:
/// x_k/phi_k < (X - sum_{j before k} x_j) / sum_{j from k on} phi_j for all k.
template <class T>
bool is_feasible_ordering(std::span<const T> weights, std::span<const T> requests, const T& resource,
                          std::span<const std::size_t> order) {
    const std::size_t n = weights.size();
    if (requests.size() != n || order.size() != n) throw std::invalid_argument("is_feasible_ordering: size mismatch");
    std::vector<bool> seen(n, false);
    for (auto k : order) {
        if (k >= n || seen[k]) throw std::invalid_argument("is_feasible_ordering: order is not a permutation");
        seen[k] = true;
    }
    T rest_weight(0);
    for (const auto& w : weights) rest_weight += w;
    T remaining = resource;
    for (auto k : order) {
        if (!(requests[k] * rest_weight < remaining * weights[k])) return false;
        remaining -= requests[k];
        rest_weight -= weights[k];
    }
    return true;
}

}  // namespace gps
