#pragma once

// Shared helpers for the test suites: literal PLF construction and random
// scenario generators. Generated arrivals and service processes are built
// by token-level bookkeeping and then confirmed with the exact compliance
// checks.

#include <algorithm>
#include <array>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gps/gps.hpp"

namespace support {

using Q = gps::rational;
using Rng = std::mt19937_64;

inline Q q(const std::string& text) { return gps::parse_rational(text); }

/// Plf from {start, jump, slope} string triples.
inline gps::Plf<Q> plf(std::initializer_list<std::array<const char*, 3>> segs) {
    std::vector<gps::Segment<Q>> out;
    for (const auto& s : segs) out.push_back({q(s[0]), q(s[1]), q(s[2])});
    return gps::Plf<Q>(std::move(out));
}

inline gps::Plf<Q> linear(const std::string& slope) { return plf({{"0", "0", slope.c_str()}}); }

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// k/den with k uniform in [lo, hi].
inline Q dyadic(Rng& rng, int lo, int hi, int den = 16) { return Q(uniform(rng, lo, hi)) / den; }

inline bool chance(Rng& rng, int percent) { return uniform(rng, 1, 100) <= percent; }

/// Token buckets with increasing bursts and decreasing rates.
inline std::vector<gps::TokenBucket<Q>> random_buckets(Rng& rng, int max_pieces) {
    std::vector<gps::TokenBucket<Q>> out;
    Q sigma = dyadic(rng, 0, 32), rho = dyadic(rng, 2, 64);
    const int pieces = uniform(rng, 1, max_pieces);
    for (int k = 0; k < pieces; ++k) {
        out.push_back({sigma, rho});
        sigma += dyadic(rng, 1, 32);
        rho = rho * dyadic(rng, 2, 14);
    }
    return out;
}

/// Latency-rate pieces with increasing rates and latencies.
inline std::vector<gps::LatencyRate<Q>> random_latency_rates(Rng& rng, int max_pieces) {
    std::vector<gps::LatencyRate<Q>> out;
    Q rate = dyadic(rng, 8, 64), latency = chance(rng, 25) ? Q(0) : dyadic(rng, 1, 24);
    const int pieces = uniform(rng, 1, max_pieces);
    for (int k = 0; k < pieces; ++k) {
        out.push_back({rate, latency});
        rate += dyadic(rng, 4, 48);
        latency += dyadic(rng, 2, 24);
    }
    return out;
}

/// Random arrivals complying with min_k (sigma_k + rho_k t): every bucket
/// starts full, refills at rho_k up to sigma_k, and pays for all traffic.
inline gps::Plf<Q> compliant_arrivals(const std::vector<gps::TokenBucket<Q>>& buckets, const Q& horizon, Rng& rng) {
    std::vector<Q> level;
    Q max_rho(0), min_rho = buckets.front().rho;
    for (const auto& b : buckets) {
        level.push_back(b.sigma);
        max_rho = gps::max_value(max_rho, b.rho);
        min_rho = gps::min_value(min_rho, b.rho);
    }
    std::vector<gps::Segment<Q>> segs;
    Q t(0);
    while (t < horizon) {
        Q lowest = *std::min_element(level.begin(), level.end());
        Q jump = chance(rng, 40) ? Q(lowest * dyadic(rng, 0, 16)) : Q(0);
        for (auto& l : level) l -= jump;
        Q rate = max_rho * dyadic(rng, 0, 32);
        const Q wanted = dyadic(rng, 2, 32);
        Q d = wanted;
        for (std::size_t k = 0; k < buckets.size(); ++k)
            if (rate > buckets[k].rho) d = gps::min_value(d, Q(level[k] / (rate - buckets[k].rho)));
        if (!(d > 0)) {
            rate = min_rho * dyadic(rng, 0, 16);
            d = wanted;
        }
        segs.push_back({t, jump, rate});
        for (std::size_t k = 0; k < buckets.size(); ++k)
            level[k] = gps::min_value(buckets[k].sigma, Q(level[k] + (buckets[k].rho - rate) * d));
        t += d;
    }
    segs.push_back({t, Q(0), min_rho});  // the tail runs forever, so it must not drain any bucket
    gps::Plf<Q> out(std::move(segs));
    if (!gps::complies_envelope(out, gps::Envelope<Q>::token_buckets(buckets).plf()))
        throw std::logic_error("compliant_arrivals: generated arrivals violate the envelope");
    return out;
}

/// Random service process with C(s,t) >= max_k R_k (t - s - L_k): the
/// virtual backlog w_k of a rate-R_k fluid served by C stays below R_k L_k.
inline gps::Plf<Q> compliant_service(const std::vector<gps::LatencyRate<Q>>& pieces, const Q& horizon, Rng& rng) {
    std::vector<Q> w(pieces.size(), Q(0));
    Q peak(0);
    for (const auto& p : pieces) peak = gps::max_value(peak, p.rate);
    std::vector<gps::Segment<Q>> segs;
    Q t(0);
    while (t < horizon) {
        Q jump = chance(rng, 20) ? dyadic(rng, 1, 16) : Q(0);
        for (auto& x : w) x = gps::max_value(Q(0), Q(x - jump));
        Q rate = peak * dyadic(rng, 0, 24);
        const Q wanted = dyadic(rng, 2, 32);
        Q d = wanted;
        for (std::size_t k = 0; k < pieces.size(); ++k)
            if (pieces[k].rate > rate)
                d = gps::min_value(d, Q((pieces[k].rate * pieces[k].latency - w[k]) / (pieces[k].rate - rate)));
        if (!(d > 0)) {
            rate = peak * dyadic(rng, 16, 24);
            d = wanted;
        }
        segs.push_back({t, jump, rate});
        for (std::size_t k = 0; k < pieces.size(); ++k)
            w[k] = gps::max_value(Q(0), Q(w[k] + (pieces[k].rate - rate) * d));
        t += d;
    }
    segs.push_back({t, Q(0), peak});  // the tail runs forever, so it must not build a deficit
    gps::Plf<Q> out(std::move(segs));
    if (!gps::complies_service(out, gps::ServiceCurve<Q>::latency_rates(pieces).plf()))
        throw std::logic_error("compliant_service: generated process violates the service curve");
    return out;
}

struct RandomInstance {
    std::vector<std::vector<gps::TokenBucket<Q>>> buckets;
    std::vector<Q> weights;
    std::vector<gps::LatencyRate<Q>> service;
    gps::Scenario<Q> scenario;
    gps::ServiceCurve<Q> curve = gps::ServiceCurve<Q>::constant_rate(Q(0));
    bool unstable = false;
};

inline Q long_run_rate(const std::vector<gps::TokenBucket<Q>>& b) {
    Q r = b.front().rho;
    for (const auto& x : b) r = gps::min_value(r, x.rho);
    return r;
}

/// Envelopes, weights and a latency-rate service curve; with `unstable`
/// the long-run arrival rates are scaled above the peak service rate.
inline RandomInstance random_instance(Rng& rng, int flows, int max_env_pieces, int max_service_pieces, bool unstable) {
    RandomInstance in;
    in.service = random_latency_rates(rng, max_service_pieces);
    in.curve = gps::ServiceCurve<Q>::latency_rates(in.service);
    Q peak(0);
    for (const auto& p : in.service) peak = gps::max_value(peak, p.rate);
    Q total(0);
    for (int j = 0; j < flows; ++j) {
        in.buckets.push_back(random_buckets(rng, max_env_pieces));
        in.weights.push_back(dyadic(rng, 4, 64));
        total += long_run_rate(in.buckets.back());
    }
    if (unstable) {
        const Q factor = peak * dyadic(rng, 20, 40) / total;
        for (auto& b : in.buckets)
            for (auto& x : b) x.rho *= factor;
    }
    Q sum(0);
    for (const auto& b : in.buckets) sum += long_run_rate(b);
    in.unstable = sum > peak;
    for (int j = 0; j < flows; ++j)
        in.scenario.flows.push_back(
            {std::to_string(j + 1), in.weights[j], gps::Envelope<Q>::token_buckets(in.buckets[j]), std::nullopt});
    return in;
}

/// Greedy arrivals and lazy service over a horizon past every breakpoint.
inline RandomInstance greedy_lazy_instance(Rng& rng, int flows, int max_env_pieces, int max_service_pieces) {
    RandomInstance in = random_instance(rng, flows, max_env_pieces, max_service_pieces, chance(rng, 30));
    Q last(1);
    for (auto& f : in.scenario.flows) {
        f.arrivals = f.envelope.plf();
        for (const auto& b : f.arrivals->breakpoints()) last = gps::max_value(last, b);
    }
    for (const auto& b : in.curve.plf().breakpoints()) last = gps::max_value(last, b);
    in.scenario.service = in.curve.plf();
    in.scenario.horizon = last * 2 + 2;
    return in;
}

/// Compliant non-greedy arrivals and a compliant non-lazy service process.
inline RandomInstance compliant_instance(Rng& rng, int flows, const Q& horizon, bool unstable) {
    RandomInstance in = random_instance(rng, flows, 3, 3, unstable);
    for (std::size_t j = 0; j < in.scenario.flows.size(); ++j)
        in.scenario.flows[j].arrivals = compliant_arrivals(in.buckets[j], horizon, rng);
    in.scenario.service = compliant_service(in.service, horizon, rng);
    in.scenario.horizon = horizon;
    return in;
}

template <class To>
gps::Scenario<To> scenario_cast(const gps::Scenario<Q>& s) {
    gps::Scenario<To> out;
    for (const auto& f : s.flows) {
        gps::FlowSpec<To> g;
        g.id = f.id;
        g.weight = gps::scalar_cast<To>(f.weight);
        g.envelope = f.envelope.is_unbounded() ? gps::Envelope<To>::unbounded()
                                               : gps::Envelope<To>(gps::plf_cast<To>(f.envelope.plf()));
        if (f.arrivals) g.arrivals = gps::plf_cast<To>(*f.arrivals);
        out.flows.push_back(std::move(g));
    }
    out.service = gps::plf_cast<To>(s.service);
    out.horizon = gps::scalar_cast<To>(s.horizon);
    return out;
}

}  // namespace support
