#pragma once

// Left-continuous, nondecreasing piecewise-linear functions on [0, inf).
//
// A Plf is a list of segments (start, jump, slope). Segment k covers the
// half-open interval (start_k, start_{k+1}]; the function jumps by `jump`
// immediately after start_k and then grows at `slope`. The value at t <= 0
// is 0, and the value at a breakpoint is the limit from the left.

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gps/numeric.hpp"

namespace gps {

template <class T>
struct Segment {
    T start;
    T jump;
    T slope;

    friend bool operator==(const Segment&, const Segment&) = default;
};

/// The line intercept + slope * t. As an envelope piece, intercept is the
/// burst sigma and slope the rate rho; as a service piece, intercept is
/// -R*L and slope is R.
template <class T>
struct AffinePiece {
    T intercept;
    T slope;

    T operator()(const T& t) const { return intercept + slope * t; }

    /// Latency L = -intercept/slope of a latency-rate piece.
    T latency() const {
        if (!(slope > T(0))) throw std::domain_error("AffinePiece: latency of a zero-rate piece");
        return T(-intercept / slope);
    }

    friend bool operator==(const AffinePiece&, const AffinePiece&) = default;
};

enum class Shape { concave, convex, both, neither };

inline const char* to_string(Shape s) {
    switch (s) {
        case Shape::concave: return "concave";
        case Shape::convex: return "convex";
        case Shape::both: return "both";
        case Shape::neither: return "neither";
    }
    return "?";
}

template <class T>
class Plf {
public:
    Plf() : segs_{{T(0), T(0), T(0)}}, base_{T(0)} {}

    explicit Plf(std::vector<Segment<T>> segs) : segs_(std::move(segs)) {
        if (segs_.empty()) segs_.push_back({T(0), T(0), T(0)});
        if (segs_.front().start != T(0)) throw std::invalid_argument("Plf: first segment must start at 0");
        for (std::size_t k = 0; k < segs_.size(); ++k) {
            if (k > 0 && !(segs_[k - 1].start < segs_[k].start))
                throw std::invalid_argument("Plf: segment starts must be strictly increasing");
            if (segs_[k].jump < T(0)) throw std::invalid_argument("Plf: negative jump");
            if (segs_[k].slope < T(0)) throw std::invalid_argument("Plf: negative slope");
        }
        rebuild_base();
    }

    /// burst + rate * t for t > 0.
    static Plf affine(const T& burst, const T& rate) { return Plf({{T(0), burst, rate}}); }

    /// Value (left limit) at t.
    T operator()(const T& t) const {
        if (!(t > T(0))) return T(0);
        std::size_t k = index_before(t);
        const auto& s = segs_[k];
        return base_[k] + s.jump + s.slope * (t - s.start);
    }

    /// Limit from the right at t >= 0.
    T right_limit(const T& t) const {
        if (t < T(0)) return T(0);
        std::size_t k = index_at_or_before(t);
        const auto& s = segs_[k];
        return base_[k] + s.jump + s.slope * (t - s.start);
    }

    /// f(t) - f(s), the mass in [s, t).
    T range(const T& s, const T& t) const {
        if (s < T(0)) throw std::invalid_argument("Plf::range: negative start");
        if (t < s) throw std::invalid_argument("Plf::range: start after end");
        return (*this)(t) - (*this)(s);
    }

    /// Slope on (t - eps, t); requires t > 0.
    T left_slope(const T& t) const {
        if (!(t > T(0))) throw std::invalid_argument("Plf::left_slope: t must be positive");
        return segs_[index_before(t)].slope;
    }

    /// Slope on (t, t + eps).
    T right_slope(const T& t) const {
        if (t < T(0)) return T(0);
        return segs_[index_at_or_before(t)].slope;
    }

    /// Jump f(t+) - f(t); nonzero only at segment starts.
    T jump_at(const T& t) const {
        if (t < T(0)) return T(0);
        std::size_t k = index_at_or_before(t);
        return segs_[k].start == t ? segs_[k].jump : T(0);
    }

    const T& final_slope() const { return segs_.back().slope; }

    std::span<const Segment<T>> segments() const { return segs_; }

    std::vector<T> breakpoints() const {
        std::vector<T> out;
        out.reserve(segs_.size());
        for (const auto& s : segs_) out.push_back(s.start);
        return out;
    }

    /// The segment's line extended to all t: value on (start_k, start_{k+1}].
    AffinePiece<T> piece(std::size_t k) const {
        const auto& s = segs_.at(k);
        T at_start = base_[k] + s.jump;
        return {T(at_start - s.slope * s.start), s.slope};
    }

    /// Line of the segment that covers (t, t + eps).
    AffinePiece<T> piece_after(const T& t) const { return piece(index_at_or_before(max_value(t, T(0)))); }

    /// Merges breakpoints that carry neither a jump nor a slope change.
    Plf normalized() const {
        std::vector<Segment<T>> out;
        for (const auto& s : segs_) {
            if (!out.empty() && s.jump == T(0) && approx_eq(s.slope, out.back().slope)) continue;
            out.push_back(s);
        }
        return Plf(std::move(out));
    }

    /// Same function with extra (redundant) breakpoints inserted.
    Plf refined(std::span<const T> extra) const {
        std::vector<T> times = breakpoints();
        for (const auto& t : extra)
            if (t > T(0)) times.push_back(t);
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        std::vector<Segment<T>> out;
        for (const auto& t : times) out.push_back({t, jump_at(t), right_slope(t)});
        return Plf(std::move(out));
    }

    friend bool operator==(const Plf& a, const Plf& b) {
        return a.normalized().segs_ == b.normalized().segs_;
    }

private:
    void rebuild_base() {
        base_.assign(segs_.size(), T(0));
        for (std::size_t k = 1; k < segs_.size(); ++k) {
            const auto& p = segs_[k - 1];
            base_[k] = base_[k - 1] + p.jump + p.slope * (segs_[k].start - p.start);
        }
    }

    // last k with start_k < t  (t > 0)
    std::size_t index_before(const T& t) const {
        auto it = std::lower_bound(segs_.begin(), segs_.end(), t,
                                   [](const Segment<T>& s, const T& v) { return s.start < v; });
        return static_cast<std::size_t>(it - segs_.begin()) - 1;
    }

    // last k with start_k <= t  (t >= 0)
    std::size_t index_at_or_before(const T& t) const {
        auto it = std::upper_bound(segs_.begin(), segs_.end(), t,
                                   [](const T& v, const Segment<T>& s) { return v < s.start; });
        return static_cast<std::size_t>(it - segs_.begin()) - 1;
    }

    std::vector<Segment<T>> segs_;
    std::vector<T> base_;
};

template <class T>
Shape shape_check(const Plf<T>& f) {
    auto segs = f.segments();
    bool concave = true, convex = true;
    for (std::size_t k = 0; k < segs.size(); ++k) {
        if (segs[k].jump != T(0)) {
            convex = false;
            if (k > 0) concave = false;
        }
        if (k > 0) {
            if (segs[k].slope > segs[k - 1].slope && !approx_eq(segs[k].slope, segs[k - 1].slope)) concave = false;
            if (segs[k].slope < segs[k - 1].slope && !approx_eq(segs[k].slope, segs[k - 1].slope)) convex = false;
        }
    }
    if (concave && convex) return Shape::both;
    if (concave) return Shape::concave;
    if (convex) return Shape::convex;
    return Shape::neither;
}

inline bool is_concave(Shape s) { return s == Shape::concave || s == Shape::both; }
inline bool is_convex(Shape s) { return s == Shape::convex || s == Shape::both; }

/// Tangent line at tau > 0 using the left derivative.
template <class T>
AffinePiece<T> tangent(const Plf<T>& f, const T& tau) {
    if (!(tau > T(0))) throw std::invalid_argument("tangent: tau must be positive");
    T slope = f.left_slope(tau);
    return {T(f(tau) - slope * tau), slope};
}

namespace detail {

enum class Side : std::uint8_t { value, right };

template <class T>
T side_value(const Plf<T>& f, const T& t, Side side) {
    return side == Side::right ? f.right_limit(t) : f(t);
}

// Sup over all realizable one-sided limits at the vertex (s, u) of
//   objective(side of s+u, side of s, side of u).
// A perturbation (ds, du) realizes the sides (sign(ds+du), sign(ds), sign(du)),
// where a positive sign selects the right limit of a left-continuous function.
template <class T, class Objective>
T vertex_sup(const T& s, const T& u, Objective&& objective) {
    std::optional<T> best;
    auto side_of = [](int sign) { return sign > 0 ? Side::right : Side::value; };
    for (int ds = -1; ds <= 1; ++ds) {
        if (ds < 0 && !(s > T(0))) continue;
        for (int du = -1; du <= 1; ++du) {
            if (du < 0 && !(u > T(0))) continue;
            std::array<int, 3> sums{};
            std::size_t count = 0;
            if (ds * du < 0) {
                sums = {-1, 0, 1};
                count = 3;
            } else {
                sums[0] = (ds + du > 0) - (ds + du < 0);
                count = 1;
            }
            for (std::size_t k = 0; k < count; ++k) {
                T v = objective(side_of(sums[k]), side_of(ds), side_of(du));
                if (!best || *best < v) best = v;
            }
        }
    }
    return *best;
}

// Vertices of the cell decomposition of {s >= 0, u >= 0} induced by the
// lines s = a, s + u = a (a a breakpoint of the process) and u = e
// (e a breakpoint of the curve).
template <class T>
std::vector<std::pair<T, T>> compliance_vertices(const Plf<T>& process, const Plf<T>& curve) {
    auto a = process.breakpoints();
    auto e = curve.breakpoints();
    std::vector<std::pair<T, T>> out;
    out.reserve(a.size() * (a.size() + 2 * e.size()));
    for (const auto& ak : a) {
        for (const auto& em : e) {
            out.emplace_back(ak, em);
            if (!(ak < em)) out.emplace_back(T(ak - em), em);
        }
        for (const auto& ak2 : a)
            if (!(ak2 < ak)) out.emplace_back(ak, T(ak2 - ak));
    }
    return out;
}

}  // namespace detail

/// A pair (s, t) with s <= t witnessing a compliance violation.
template <class T>
struct ComplianceWitness {
    T s;
    T t;
    T excess;  // amount by which the inequality fails
};

/// First violation of A(s,t) <= E(t-s), if any. Exact: the excess is
/// affine on every cell of the breakpoint arrangement, so its supremum is
/// attained (as a one-sided limit) at a cell vertex or escapes to infinity.
template <class T>
std::optional<ComplianceWitness<T>> envelope_violation(const Plf<T>& arrivals, const Plf<T>& envelope) {
    using detail::Side;
    if (arrivals.final_slope() > envelope.final_slope() && !approx_eq(arrivals.final_slope(), envelope.final_slope())) {
        T u0 = max_value(arrivals.segments().back().start, envelope.segments().back().start) + T(1);
        T deficit = envelope(u0) - arrivals(u0);
        T u = u0 + max_value(T(0), deficit) / (arrivals.final_slope() - envelope.final_slope()) + T(1);
        return ComplianceWitness<T>{T(0), u, T(arrivals(u) - envelope(u))};
    }
    std::optional<ComplianceWitness<T>> worst;
    for (const auto& [s, u] : detail::compliance_vertices(arrivals, envelope)) {
        T t = s + u;
        T excess = detail::vertex_sup(s, u, [&](Side st, Side ss, Side su) {
            return T(detail::side_value(arrivals, t, st) - detail::side_value(arrivals, s, ss) -
                     detail::side_value(envelope, u, su));
        });
        if (excess > T(0) && !approx_eq(excess, T(0)) && (!worst || worst->excess < excess))
            worst = ComplianceWitness<T>{s, t, excess};
    }
    return worst;
}

/// First violation of C(s,t) >= S(t-s), if any (mirror of envelope_violation).
template <class T>
std::optional<ComplianceWitness<T>> service_violation(const Plf<T>& process, const Plf<T>& curve) {
    using detail::Side;
    if (curve.final_slope() > process.final_slope() && !approx_eq(curve.final_slope(), process.final_slope())) {
        T u0 = max_value(process.segments().back().start, curve.segments().back().start) + T(1);
        T surplus = process(u0) - curve(u0);
        T u = u0 + max_value(T(0), surplus) / (curve.final_slope() - process.final_slope()) + T(1);
        return ComplianceWitness<T>{T(0), u, T(curve(u) - process(u))};
    }
    std::optional<ComplianceWitness<T>> worst;
    for (const auto& [s, u] : detail::compliance_vertices(process, curve)) {
        T t = s + u;
        T deficit = detail::vertex_sup(s, u, [&](Side st, Side ss, Side su) {
            return T(detail::side_value(curve, u, su) - detail::side_value(process, t, st) +
                     detail::side_value(process, s, ss));
        });
        if (deficit > T(0) && !approx_eq(deficit, T(0)) && (!worst || worst->excess < deficit))
            worst = ComplianceWitness<T>{s, t, deficit};
    }
    return worst;
}

template <class T>
bool complies_envelope(const Plf<T>& arrivals, const Plf<T>& envelope) {
    return !envelope_violation(arrivals, envelope).has_value();
}

template <class T>
bool complies_service(const Plf<T>& process, const Plf<T>& curve) {
    return !service_violation(process, curve).has_value();
}

namespace detail {

// Pointwise min (take_min) or max of two PLFs.
template <class T>
Plf<T> pointwise_extreme(const Plf<T>& f, const Plf<T>& g, bool take_min) {
    auto pick = [&](const T& a, const T& b) { return take_min ? min_value(a, b) : max_value(a, b); };
    std::vector<T> times = f.breakpoints();
    for (const auto& t : g.breakpoints()) times.push_back(t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    std::vector<Segment<T>> out;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const T& a = times[k];
        AffinePiece<T> lf = f.piece_after(a), lg = g.piece_after(a);
        T before = pick(f(a), g(a));
        T after = pick(lf(a), lg(a));
        // the extreme of two lines is the lower line on one side of their crossing
        auto upper_or_lower = [&](const T& t) {
            T vf = lf(t), vg = lg(t);
            return (take_min ? vf <= vg : vf >= vg) ? lf.slope : lg.slope;
        };
        T probe = k + 1 < times.size() ? T((a + times[k + 1]) / 2) : T(a + 1);
        out.push_back({a, max_value(T(0), T(after - before)), T(0)});
        if (lf.slope != lg.slope) {
            T cross = (lg.intercept - lf.intercept) / (lf.slope - lg.slope);
            bool inside = a < cross && (k + 1 >= times.size() || cross < times[k + 1]);
            if (inside) {
                out.back().slope = upper_or_lower(T((a + cross) / 2));
                T probe2 = k + 1 < times.size() ? T((cross + times[k + 1]) / 2) : T(cross + 1);
                out.push_back({cross, T(0), upper_or_lower(probe2)});
                continue;
            }
        }
        out.back().slope = upper_or_lower(probe);
    }
    return Plf<T>(std::move(out)).normalized();
}

}  // namespace detail

template <class T>
Plf<T> pointwise_min(const Plf<T>& f, const Plf<T>& g) {
    return detail::pointwise_extreme(f, g, true);
}

template <class T>
Plf<T> pointwise_max(const Plf<T>& f, const Plf<T>& g) {
    return detail::pointwise_extreme(f, g, false);
}

/// Sum of two PLFs.
template <class T>
Plf<T> operator+(const Plf<T>& f, const Plf<T>& g) {
    std::vector<T> times = f.breakpoints();
    for (const auto& t : g.breakpoints()) times.push_back(t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<Segment<T>> out;
    for (const auto& t : times)
        out.push_back({t, T(f.jump_at(t) + g.jump_at(t)), T(f.right_slope(t) + g.right_slope(t))});
    return Plf<T>(std::move(out)).normalized();
}

/// Converts the scalar type of a PLF.
template <class To, class From>
Plf<To> plf_cast(const Plf<From>& f) {
    std::vector<Segment<To>> out;
    for (const auto& s : f.segments())
        out.push_back({scalar_cast<To>(s.start), scalar_cast<To>(s.jump), scalar_cast<To>(s.slope)});
    return Plf<To>(std::move(out));
}

}  // namespace gps
