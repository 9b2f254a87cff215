#pragma once

// Arrival envelopes, strict service curves, and the GPS leftover service
// curve built from them.

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gps/maxmin.hpp"
#include "gps/plf.hpp"

namespace gps {

template <class T>
struct TokenBucket {
    T sigma;  // burst
    T rho;    // rate
};

template <class T>
struct LatencyRate {
    T rate;
    T latency;
};

/// Raised when a construction needs a positive service slope and finds zero.
class degenerate_service : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace detail {

// Lower (take_min) or upper envelope of lines intercept + slope*t over t > 0,
// as a PLF that is zero for t <= 0.
template <class T>
Plf<T> line_envelope(std::span<const AffinePiece<T>> lines, bool take_min) {
    if (lines.empty()) throw std::invalid_argument("line_envelope: no lines");
    std::vector<T> times{T(0)};
    for (std::size_t a = 0; a < lines.size(); ++a)
        for (std::size_t b = a + 1; b < lines.size(); ++b) {
            if (lines[a].slope == lines[b].slope) continue;
            T t = (lines[b].intercept - lines[a].intercept) / (lines[a].slope - lines[b].slope);
            if (t > T(0)) times.push_back(t);
        }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    std::vector<Segment<T>> segs;
    for (std::size_t k = 0; k < times.size(); ++k) {
        T probe = k + 1 < times.size() ? T((times[k] + times[k + 1]) / 2) : T(times[k] + 1);
        const AffinePiece<T>* best = &lines[0];
        for (const auto& l : lines) {
            T v = l(probe), b = (*best)(probe);
            if (take_min ? v < b : v > b) best = &l;
        }
        T jump = k == 0 ? best->intercept : T(0);
        if (jump < T(0)) throw std::invalid_argument("line_envelope: negative value at 0+");
        segs.push_back({times[k], jump, best->slope});
    }
    return Plf<T>(std::move(segs)).normalized();
}

}  // namespace detail

/// Concave arrival envelope E, or the unbounded envelope E = +inf.
template <class T>
class Envelope {
public:
    explicit Envelope(Plf<T> f) : plf_(std::move(f)) {
        if (!is_concave(shape_check(plf_))) throw std::invalid_argument("envelope not concave");
    }

    static Envelope unbounded() {
        Envelope e{Plf<T>()};
        e.unbounded_ = true;
        return e;
    }

    static Envelope token_bucket(const T& sigma, const T& rho) {
        TokenBucket<T> b{sigma, rho};
        return token_buckets(std::span<const TokenBucket<T>>(&b, 1));
    }

    /// min_k (sigma_k + rho_k t) for t > 0.
    static Envelope token_buckets(std::span<const TokenBucket<T>> buckets) {
        std::vector<AffinePiece<T>> lines;
        for (const auto& b : buckets) {
            if (b.sigma < T(0) || b.rho < T(0)) throw std::invalid_argument("token bucket with negative parameter");
            lines.push_back({b.sigma, b.rho});
        }
        return Envelope(detail::line_envelope<T>(lines, true));
    }

    bool is_unbounded() const { return unbounded_; }

    const Plf<T>& plf() const {
        if (unbounded_) throw std::logic_error("Envelope: unbounded envelope has no PLF");
        return plf_;
    }

    extended<T> operator()(const T& t) const {
        if (!(t > T(0))) return extended<T>(T(0));
        if (unbounded_) return extended<T>::pos_inf();
        return extended<T>(plf_(t));
    }

    /// Token-bucket view: one (sigma, rho) per linear piece.
    std::vector<TokenBucket<T>> pieces() const {
        std::vector<TokenBucket<T>> out;
        if (unbounded_) return out;
        for (std::size_t k = 0; k < plf_.segments().size(); ++k) {
            auto p = plf_.piece(k);
            out.push_back({p.intercept, p.slope});
        }
        return out;
    }

    friend bool operator==(const Envelope& a, const Envelope& b) {
        if (a.unbounded_ || b.unbounded_) return a.unbounded_ == b.unbounded_;
        return a.plf_ == b.plf_;
    }

private:
    Plf<T> plf_;
    bool unbounded_ = false;
};

/// Convex strict service curve without jumps.
template <class T>
class ServiceCurve {
public:
    explicit ServiceCurve(Plf<T> f) : plf_(std::move(f)) {
        if (!is_convex(shape_check(plf_))) throw std::invalid_argument("service curve not convex");
    }

    static ServiceCurve constant_rate(const T& rate) { return latency_rate(rate, T(0)); }

    static ServiceCurve latency_rate(const T& rate, const T& latency) {
        LatencyRate<T> p{rate, latency};
        return latency_rates(std::span<const LatencyRate<T>>(&p, 1));
    }

    /// max(0, max_k R_k (t - L_k)).
    static ServiceCurve latency_rates(std::span<const LatencyRate<T>> pieces) {
        std::vector<AffinePiece<T>> lines{{T(0), T(0)}};
        for (const auto& p : pieces) {
            if (p.rate < T(0) || p.latency < T(0)) throw std::invalid_argument("latency-rate piece with negative parameter");
            lines.push_back({T(-p.rate * p.latency), p.rate});
        }
        return ServiceCurve(detail::line_envelope<T>(lines, false));
    }

    const Plf<T>& plf() const { return plf_; }
    T operator()(const T& t) const { return plf_(t); }

    /// Latency-rate view of the pieces with positive rate.
    std::vector<LatencyRate<T>> pieces() const {
        std::vector<LatencyRate<T>> out;
        for (std::size_t k = 0; k < plf_.segments().size(); ++k) {
            auto p = plf_.piece(k);
            if (p.slope > T(0)) out.push_back({p.slope, p.latency()});
        }
        return out;
    }

    friend bool operator==(const ServiceCurve&, const ServiceCurve&) = default;

private:
    Plf<T> plf_;
};

template <class T>
struct FlowSpec {
    std::string id;
    T weight{1};
    Envelope<T> envelope = Envelope<T>::unbounded();
    std::optional<Plf<T>> arrivals;

    void validate(bool check_compliance = true) const {
        if (!(weight > T(0))) throw std::invalid_argument("flow '" + id + "': weight must be positive");
        if (check_compliance && arrivals && !envelope.is_unbounded()) {
            if (auto w = envelope_violation(*arrivals, envelope.plf()))
                throw std::invalid_argument("flow '" + id + "': arrivals exceed envelope on [" + to_decimal(w->s) +
                                            ", " + to_decimal(w->t) + ")");
        }
    }
};

template <class T>
std::vector<T> weights_of(std::span<const FlowSpec<T>> flows) {
    std::vector<T> w;
    for (const auto& f : flows) w.push_back(f.weight);
    return w;
}

/// Index of the flow with the given id.
template <class T>
std::size_t find_flow(std::span<const FlowSpec<T>> flows, const std::string& id) {
    for (std::size_t j = 0; j < flows.size(); ++j)
        if (flows[j].id == id) return j;
    throw std::out_of_range("unknown flow id '" + id + "'");
}

/// Aggregate service curve with values in [0, +inf]: finite on (0, t0) and
/// +inf from the exhaustion time t0 on (when the envelopes fit under the
/// service curve).
template <class T>
struct UniversalCurve {
    Plf<T> finite_part;
    std::optional<T> infinite_from;

    extended<T> operator()(const T& t) const {
        if (!(t > T(0))) return extended<T>(T(0));
        if (infinite_from && !(t < *infinite_from)) return extended<T>::pos_inf();
        return extended<T>(finite_part(t));
    }
};

namespace detail {

// The pointwise allocation problem on one base interval, where the service
// curve and every envelope are affine. Requests of unbounded envelopes (and
// of the flow of interest, for the leftover curve) are +inf.
template <class T>
struct LocalProblem {
    std::vector<T> weights;
    std::vector<std::optional<AffinePiece<T>>> requests;
    AffinePiece<T> resource;

    AllocationProblem<T> at(const T& t) const {
        AllocationProblem<T> p;
        p.weights = weights;
        for (const auto& r : requests) p.requests.push_back(r ? extended<T>(max_value(T(0), (*r)(t))) : extended<T>::pos_inf());
        p.resource = max_value(T(0), resource(t));
        return p;
    }

    AllocationProblem<T> slopes() const {
        AllocationProblem<T> p;
        p.weights = weights;
        for (const auto& r : requests) p.requests.push_back(r ? extended<T>(r->slope) : extended<T>::pos_inf());
        p.resource = resource.slope;
        return p;
    }

    // scale * (X(t) - sum_M x_j(t)) / sum_{not M} phi_j
    AffinePiece<T> subset_line(const std::vector<bool>& in_m, const T& scale) const {
        T icpt = resource.intercept, slope = resource.slope, rest(0);
        for (std::size_t j = 0; j < weights.size(); ++j) {
            if (in_m[j]) {
                icpt -= requests[j]->intercept;
                slope -= requests[j]->slope;
            } else {
                rest += weights[j];
            }
        }
        return {T(scale * icpt / rest), T(scale * slope / rest)};
    }
};

template <class T>
LocalProblem<T> local_problem(std::span<const FlowSpec<T>> flows, const Plf<T>& service, const T& a,
                              std::optional<std::size_t> excluded) {
    LocalProblem<T> lp;
    for (std::size_t j = 0; j < flows.size(); ++j) {
        lp.weights.push_back(flows[j].weight);
        if ((excluded && *excluded == j) || flows[j].envelope.is_unbounded())
            lp.requests.emplace_back(std::nullopt);
        else
            lp.requests.emplace_back(flows[j].envelope.plf().piece_after(a));
    }
    lp.resource = service.piece_after(a);
    return lp;
}

// Satisfied set and level of the best allocation over proper subsets M of
// the players; coincides with allocate() unless every request fits.
template <class T>
std::pair<T, std::vector<bool>> proper_allocation(const AllocationProblem<T>& p) {
    auto r = allocate(p);
    if (r.fair_share.is_finite()) return {r.fair_share.value(), r.satisfied};
    std::optional<std::pair<T, std::vector<bool>>> best;
    for (std::size_t k = 0; k < p.size(); ++k) {
        AllocationProblem<T> q = p;
        q.requests[k] = extended<T>::pos_inf();
        auto rk = allocate(q);
        T f = rk.fair_share.value();
        if (!best || best->first < f) best = std::make_pair(f, rk.satisfied);
    }
    if (!best) throw std::logic_error("proper_allocation: no players");
    return *best;
}

// Upper envelope tracer for a convex piecewise-linear g given an oracle
// returning a line that supports g at any point. Emits (start, line) pairs.
template <class T, class Oracle>
void trace_convex(const T& a, const T& c, const AffinePiece<T>& la, const AffinePiece<T>& lc, Oracle& oracle,
                  std::vector<std::pair<T, AffinePiece<T>>>& out, int depth = 0) {
    if (depth > 256) throw std::logic_error("trace_convex: recursion did not terminate");
    if (approx_le(lc.slope, la.slope)) {
        out.emplace_back(a, la);
        return;
    }
    T m = (lc.intercept - la.intercept) / (la.slope - lc.slope);
    if (approx_le(m, a)) {
        out.emplace_back(a, lc);
        return;
    }
    if (approx_le(c, m)) {
        out.emplace_back(a, la);
        return;
    }
    AffinePiece<T> lm = oracle(m);
    if (approx_le(lm(m), la(m))) {
        out.emplace_back(a, la);
        out.emplace_back(m, lc);
        return;
    }
    trace_convex(a, m, la, lm, oracle, out, depth + 1);
    trace_convex(m, c, lm, lc, oracle, out, depth + 1);
}

template <class T>
std::vector<T> merged_breakpoints(std::span<const FlowSpec<T>> flows, const Plf<T>& service,
                                  std::optional<std::size_t> excluded) {
    std::vector<T> bps = service.breakpoints();
    for (std::size_t j = 0; j < flows.size(); ++j) {
        if ((excluded && *excluded == j) || flows[j].envelope.is_unbounded()) continue;
        for (const auto& t : flows[j].envelope.plf().breakpoints()) bps.push_back(t);
    }
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    return bps;
}

// Builds the convex curve max over subsets on [0, cutoff] (or [0, inf)) by
// tracing each base interval. `line_at(lp, t)` returns the maximizing line
// at t and `max_slope(lp)` the asymptotic slope on the last interval.
template <class T, class LineAt, class MaxSlope>
Plf<T> build_convex_curve(std::span<const FlowSpec<T>> flows, const Plf<T>& service,
                          std::optional<std::size_t> excluded, std::optional<T> cutoff, LineAt line_at,
                          MaxSlope max_slope) {
    std::vector<T> bps = merged_breakpoints(flows, service, excluded);
    if (cutoff) {
        bps.erase(std::remove_if(bps.begin(), bps.end(), [&](const T& t) { return !(t < *cutoff); }), bps.end());
        bps.push_back(*cutoff);
    }
    std::vector<std::pair<T, AffinePiece<T>>> pieces;
    for (std::size_t k = 0; k < bps.size(); ++k) {
        const T& a = bps[k];
        bool last = k + 1 == bps.size();
        if (last && cutoff) break;
        LocalProblem<T> lp = local_problem(flows, service, a, excluded);
        auto oracle = [&](const T& t) { return line_at(lp, t); };
        AffinePiece<T> la = oracle(a);
        if (!last) {
            trace_convex(a, bps[k + 1], la, oracle(bps[k + 1]), oracle, pieces);
            continue;
        }
        T target = max_slope(lp);
        T c = max_value(T(2 * a), T(a + 1));
        for (int iter = 0;; ++iter) {
            if (iter > 200) throw std::logic_error("build_convex_curve: asymptotic slope not reached");
            AffinePiece<T> lc = oracle(c);
            if (approx_eq(lc.slope, target)) {
                trace_convex(a, c, la, lc, oracle, pieces);
                pieces.emplace_back(c, lc);
                break;
            }
            c = T(c * 2);
        }
    }
    std::vector<Segment<T>> segs;
    for (const auto& [start, line] : pieces) {
        T slope = max_value(T(0), line.slope);
        if (!segs.empty() && segs.back().start == start) {
            segs.back().slope = slope;
            continue;
        }
        if (!segs.empty() && approx_le(start, segs.back().start)) continue;
        segs.push_back({start, T(0), slope});
    }
    return Plf<T>(std::move(segs)).normalized();
}

}  // namespace detail

/// Leftover service curve of flow i: pointwise, the share flow i obtains
/// with an unbounded request when every other flow requests its envelope
/// and the resource is the service curve.
template <class T>
ServiceCurve<T> leftover(std::span<const FlowSpec<T>> flows, std::size_t i, const ServiceCurve<T>& service) {
    if (i >= flows.size()) throw std::out_of_range("leftover: unknown flow index " + std::to_string(i));
    const T phi_i = flows[i].weight;
    auto line_at = [&](const detail::LocalProblem<T>& lp, const T& t) {
        return lp.subset_line(allocate(lp.at(t)).satisfied, phi_i);
    };
    auto max_slope = [&](const detail::LocalProblem<T>& lp) { return per_player_share(lp.slopes(), i); };
    return ServiceCurve<T>(
        detail::build_convex_curve<T>(flows, service.plf(), i, std::nullopt, line_at, max_slope));
}

/// Time from which every envelope fits under the service curve, if any.
template <class T>
std::optional<T> exhaustion_time(std::span<const FlowSpec<T>> flows, const ServiceCurve<T>& service) {
    if (flows.empty()) return T(0);
    for (const auto& f : flows)
        if (f.envelope.is_unbounded()) return std::nullopt;
    auto bps = detail::merged_breakpoints<T>(flows, service.plf(), std::nullopt);
    // excess(t) = sum_j E_j(t) - C(t) is concave on (0, inf); find its first zero
    for (std::size_t k = 0; k < bps.size(); ++k) {
        const T& a = bps[k];
        T icpt = -service.plf().piece_after(a).intercept, slope = -service.plf().piece_after(a).slope;
        for (const auto& f : flows) {
            auto p = f.envelope.plf().piece_after(a);
            icpt += p.intercept;
            slope += p.slope;
        }
        AffinePiece<T> excess{icpt, slope};
        if (!(excess(a) > T(0)) && !(slope > T(0))) return a;
        if (!(slope < T(0))) continue;
        T root = -icpt / slope;
        if (k + 1 == bps.size() || !(bps[k + 1] < root)) return root;
    }
    return std::nullopt;
}

/// Aggregate curve: pointwise fair share with requests E_j(t) and resource
/// C(t), +inf once the envelopes fit.
template <class T>
UniversalCurve<T> universal(std::span<const FlowSpec<T>> flows, const ServiceCurve<T>& service) {
    UniversalCurve<T> out;
    out.infinite_from = exhaustion_time(flows, service);
    if (out.infinite_from && *out.infinite_from == T(0)) return out;
    auto line_at = [&](const detail::LocalProblem<T>& lp, const T& t) {
        return lp.subset_line(detail::proper_allocation(lp.at(t)).second, T(1));
    };
    auto max_slope = [&](const detail::LocalProblem<T>& lp) { return detail::proper_allocation(lp.slopes()).first; };
    out.finite_part = detail::build_convex_curve<T>(flows, service.plf(), std::nullopt, out.infinite_from, line_at, max_slope);
    return out;
}

/// The maximizing subset at time t for flow i: flows j != i whose envelope
/// is satisfied in the pointwise allocation (E_i taken as +inf).
template <class T>
std::vector<std::size_t> maximizer_set(std::span<const FlowSpec<T>> flows, const ServiceCurve<T>& service, const T& t,
                                       std::size_t i) {
    if (i >= flows.size()) throw std::out_of_range("maximizer_set: unknown flow index");
    if (!(t > T(0))) throw std::invalid_argument("maximizer_set: t must be positive");
    AllocationProblem<T> p;
    for (std::size_t j = 0; j < flows.size(); ++j) {
        p.weights.push_back(flows[j].weight);
        p.requests.push_back(j == i ? extended<T>::pos_inf() : flows[j].envelope(t));
    }
    p.resource = service(t);
    return allocate(p).satisfied_set();
}

/// Requests x_j = E_j'(tau-) / C'(tau-) over the maximizing subset at tau;
/// a feasible subset for resource 1.
template <class T>
std::vector<Request<T>> slope_requests(std::span<const FlowSpec<T>> flows, const ServiceCurve<T>& service,
                                       const T& tau, std::size_t i) {
    if (!(tau > T(0))) throw std::invalid_argument("slope_requests: tau must be positive");
    T rate = service.plf().left_slope(tau);
    if (rate == T(0)) throw degenerate_service("slope_requests: service curve has zero slope before tau");
    std::vector<Request<T>> out;
    for (auto j : maximizer_set(flows, service, tau, i))
        out.push_back({j, T(flows[j].envelope.plf().left_slope(tau) / rate)});
    return out;
}

template <class T>
struct TangentScenario {
    std::vector<FlowSpec<T>> flows;
    ServiceCurve<T> service;
    T rate;
    T latency;
};

/// Token buckets tangent to every envelope at tau and the latency-rate curve
/// tangent to the service curve at tau.
template <class T>
TangentScenario<T> tangent_scenario(std::span<const FlowSpec<T>> flows, const ServiceCurve<T>& service, const T& tau) {
    if (!(tau > T(0))) throw std::invalid_argument("tangent_scenario: tau must be positive");
    T rate = service.plf().left_slope(tau);
    if (rate == T(0)) throw degenerate_service("tangent_scenario: service curve has zero slope before tau");
    T latency = tau - service(tau) / rate;
    std::vector<FlowSpec<T>> out;
    for (const auto& f : flows) {
        FlowSpec<T> g = f;
        if (!f.envelope.is_unbounded()) {
            auto line = tangent(f.envelope.plf(), tau);
            g.envelope = Envelope<T>::token_bucket(line.intercept, line.slope);
        }
        out.push_back(std::move(g));
    }
    return {std::move(out), ServiceCurve<T>::latency_rate(rate, latency), rate, latency};
}

/// Departures D_j = min{E_j, S_j} when every flow is greedy (A_j = E_j) and
/// the server is lazy (C equals the service curve).
template <class T>
std::vector<Plf<T>> greedy_lazy(std::span<const FlowSpec<T>> flows, const ServiceCurve<T>& service) {
    for (const auto& f : flows)
        if (f.envelope.is_unbounded())
            throw std::invalid_argument("greedy_lazy: flow '" + f.id + "' has an unbounded envelope");
    std::vector<Plf<T>> out;
    for (std::size_t j = 0; j < flows.size(); ++j)
        out.push_back(pointwise_min(flows[j].envelope.plf(), leftover(flows, j, service).plf()));
    return out;
}

}  // namespace gps
