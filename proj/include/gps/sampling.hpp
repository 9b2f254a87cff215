#pragma once

// Random feasible subsets of shares, used by randomized checks.

#include <random>
#include <span>
#include <vector>

#include "gps/maxmin.hpp"

namespace gps {

/// A random nonempty subset M with shares (x_j) that is feasible for
/// resource 1. Raw shares are multiples of 1/16 scaled by a factor that
/// places the subset on the feasibility boundary about a quarter of the time.
template <class T, class Rng>
std::vector<Request<T>> random_feasible_shares(std::span<const T> weights, Rng& rng) {
    const std::size_t n = weights.size();
    std::uniform_int_distribution<int> coin(0, 1), raw(1, 16), scale(1, 4);
    std::vector<Request<T>> out;
    while (out.empty())
        for (std::size_t j = 0; j < n; ++j)
            if (coin(rng)) out.push_back({j, T(raw(rng)) / 16});
    std::vector<bool> in_m(n, false);
    T sum(0), max_ratio(0), rest(0);
    for (const auto& r : out) {
        in_m[r.player] = true;
        sum += r.amount;
        max_ratio = max_value(max_ratio, T(r.amount / weights[r.player]));
    }
    for (std::size_t j = 0; j < n; ++j)
        if (!in_m[j]) rest += weights[j];
    const T lambda = T(scale(rng)) / 4 / (max_ratio * rest + sum);
    for (auto& r : out) r.amount *= lambda;
    return out;
}

}  // namespace gps
