#pragma once

// Scalar support for the library: an exact rational type, extended reals
// with +/- infinity, tolerance-aware comparisons, and decimal I/O.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/multiprecision/gmp.hpp>

namespace gps {

using rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using big_int = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                              boost::multiprecision::et_off>;

/// Per-scalar policy. Exact scalars compare with ==; floating scalars use a
/// relative tolerance for the internal decisions (event grouping, snapping).
template <class T>
struct scalar_traits;

template <>
struct scalar_traits<rational> {
    static constexpr bool exact = true;
    static rational eps() { return rational(0); }
    static double to_double(const rational& v) { return v.convert_to<double>(); }
};

template <>
struct scalar_traits<double> {
    static constexpr bool exact = false;
    static double eps() { return 1e-12; }
    static double to_double(double v) { return v; }
};

template <class T>
T abs_value(const T& v) {
    return v < T(0) ? T(-v) : v;
}

template <class T>
T max_value(const T& a, const T& b) {
    return a < b ? b : a;
}

template <class T>
T min_value(const T& a, const T& b) {
    return b < a ? b : a;
}

template <class T>
double to_double(const T& v) {
    return scalar_traits<T>::to_double(v);
}

/// a == b, up to the scalar's relative tolerance.
template <class T>
bool approx_eq(const T& a, const T& b) {
    if constexpr (scalar_traits<T>::exact) {
        return a == b;
    } else {
        T scale = max_value(T(1), max_value(abs_value(a), abs_value(b)));
        return abs_value(a - b) <= scalar_traits<T>::eps() * scale;
    }
}

template <class T>
bool approx_le(const T& a, const T& b) {
    return a <= b || approx_eq(a, b);
}

template <class T>
bool approx_lt(const T& a, const T& b) {
    return a < b && !approx_eq(a, b);
}

// Extended reals ------------------------------------------------------------

template <class T>
class extended {
public:
    enum class kind : std::uint8_t { neg_inf, finite, pos_inf };

    extended() : kind_(kind::finite), value_(0) {}
    extended(const T& v) : kind_(kind::finite), value_(v) {}  // NOLINT: implicit on purpose
    extended(int v) : kind_(kind::finite), value_(v) {}      // NOLINT

    static extended pos_inf() { return extended(kind::pos_inf); }
    static extended neg_inf() { return extended(kind::neg_inf); }

    bool is_finite() const { return kind_ == kind::finite; }
    bool is_pos_inf() const { return kind_ == kind::pos_inf; }
    bool is_neg_inf() const { return kind_ == kind::neg_inf; }

    const T& value() const {
        if (!is_finite()) throw std::domain_error("extended: value() of an infinite quantity");
        return value_;
    }

    friend bool operator==(const extended& a, const extended& b) {
        if (a.kind_ != b.kind_) return false;
        return !a.is_finite() || a.value_ == b.value_;
    }

    friend std::strong_ordering operator<=>(const extended& a, const extended& b) {
        if (a.kind_ != b.kind_) return a.kind_ <=> b.kind_;
        if (!a.is_finite()) return std::strong_ordering::equal;
        if (a.value_ < b.value_) return std::strong_ordering::less;
        if (b.value_ < a.value_) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

    friend extended operator+(const extended& a, const extended& b) {
        if (a.is_finite() && b.is_finite()) return extended(a.value_ + b.value_);
        if ((a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf()))
            throw std::domain_error("extended: +inf + -inf is undefined");
        return a.is_finite() ? b : a;
    }

    friend extended operator-(const extended& a) {
        if (a.is_finite()) return extended(T(-a.value_));
        return a.is_pos_inf() ? neg_inf() : pos_inf();
    }

    friend extended operator-(const extended& a, const extended& b) { return a + (-b); }

    /// Multiplication by a finite scalar; 0 * inf is taken as 0.
    friend extended operator*(const extended& a, const T& s) {
        if (a.is_finite()) return extended(a.value_ * s);
        if (s == T(0)) return extended(T(0));
        return (s > T(0)) == a.is_pos_inf() ? pos_inf() : neg_inf();
    }

    /// Division by a strictly positive scalar.
    friend extended operator/(const extended& a, const T& s) {
        if (!(s > T(0))) throw std::domain_error("extended: division by a non-positive scalar");
        if (a.is_finite()) return extended(a.value_ / s);
        return a;
    }

private:
    explicit extended(kind k) : kind_(k), value_(0) {}

    kind kind_;
    T value_;
};

template <class T>
extended<T> min_value(const extended<T>& a, const extended<T>& b) {
    return b < a ? b : a;
}

template <class T>
extended<T> max_value(const extended<T>& a, const extended<T>& b) {
    return a < b ? b : a;
}

template <class T>
bool approx_eq(const extended<T>& a, const extended<T>& b) {
    if (a.is_finite() && b.is_finite()) return approx_eq(a.value(), b.value());
    return a == b;
}

// Decimal I/O ---------------------------------------------------------------

/// Parses "p/q", "-3", "0.125", "1.5e-3" into an exact rational.
inline rational parse_rational(std::string_view text) {
    auto fail = [&] {
        return std::invalid_argument("not a rational number: '" + std::string(text) + "'");
    };
    std::string s(text);
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == ' '; }), s.end());
    if (s.empty()) throw fail();
    if (auto slash = s.find('/'); slash != std::string::npos) {
        rational num = parse_rational(s.substr(0, slash));
        rational den = parse_rational(s.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
        return num / den;
    }
    bool negative = false;
    std::size_t pos = 0;
    if (s[pos] == '+' || s[pos] == '-') {
        negative = s[pos] == '-';
        ++pos;
    }
    std::string digits;
    int frac_digits = 0;
    bool seen_point = false, seen_digit = false;
    for (; pos < s.size(); ++pos) {
        char c = s[pos];
        if (c >= '0' && c <= '9') {
            digits.push_back(c);
            seen_digit = true;
            if (seen_point) ++frac_digits;
        } else if (c == '.' && !seen_point) {
            seen_point = true;
        } else {
            break;
        }
    }
    if (!seen_digit) throw fail();
    long exponent = 0;
    if (pos < s.size()) {
        if (s[pos] != 'e' && s[pos] != 'E') throw fail();
        std::string exp_text = s.substr(pos + 1);
        if (exp_text.empty()) throw fail();
        std::size_t used = 0;
        try {
            exponent = std::stol(exp_text, &used);
        } catch (const std::exception&) {
            throw fail();
        }
        if (used != exp_text.size() || exponent > 4000 || exponent < -4000) throw fail();
    }
    digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));  // a leading 0 would mean octal
    big_int mantissa(digits);
    long shift = exponent - frac_digits;
    big_int ten_pow = boost::multiprecision::pow(big_int(10), static_cast<unsigned>(shift < 0 ? -shift : shift));
    rational value = shift >= 0 ? rational(mantissa * ten_pow) : rational(mantissa, ten_pow);
    return negative ? rational(-value) : value;
}

/// Exact "p/q" (or "p") rendering, lossless.
inline std::string exact_string(const rational& v) {
    return v.str();
}

/// Decimal rendering with `digits` significant digits, ties to even, in the
/// style of printf's %g.
inline std::string to_decimal(const rational& v, int digits = 12) {
    if (v == 0) return "0";
    bool negative = v < 0;
    rational a = negative ? rational(-v) : v;
    big_int num = boost::multiprecision::numerator(a);
    big_int den = boost::multiprecision::denominator(a);

    // exponent e with 10^e <= a < 10^(e+1)
    long e = static_cast<long>(num.str().size()) - static_cast<long>(den.str().size());
    auto pow10 = [](long k) { return boost::multiprecision::pow(big_int(10), static_cast<unsigned>(k)); };
    auto ge_pow10 = [&](long k) {  // a >= 10^k
        return k >= 0 ? num >= den * pow10(k) : num * pow10(-k) >= den;
    };
    while (!ge_pow10(e)) --e;
    while (ge_pow10(e + 1)) ++e;

    long shift = digits - 1 - e;  // scaled = round(a * 10^shift)
    big_int scaled_num = shift >= 0 ? num * pow10(shift) : num;
    big_int scaled_den = shift >= 0 ? den : den * pow10(-shift);
    big_int q = scaled_num / scaled_den;
    big_int r = scaled_num % scaled_den;
    if (2 * r > scaled_den || (2 * r == scaled_den && q % 2 != 0)) ++q;  // ties to even, as printf does
    std::string mant = q.str();
    if (static_cast<int>(mant.size()) > digits) {  // rounding carried into a new digit
        ++e;
        mant.pop_back();
    }
    std::string out = negative ? "-" : "";
    if (e < -5 || e >= digits) {
        std::string frac = mant.substr(1);
        while (!frac.empty() && frac.back() == '0') frac.pop_back();
        out += mant.substr(0, 1);
        if (!frac.empty()) out += "." + frac;
        char buf[32];
        std::snprintf(buf, sizeof buf, "e%c%02ld", e < 0 ? '-' : '+', e < 0 ? -e : e);
        out += buf;
        return out;
    }
    std::string body;
    if (e >= 0) {
        std::string int_part = mant.substr(0, static_cast<std::size_t>(e + 1));
        std::string frac = mant.substr(static_cast<std::size_t>(e + 1));
        while (!frac.empty() && frac.back() == '0') frac.pop_back();
        body = int_part + (frac.empty() ? "" : "." + frac);
    } else {
        std::string frac = std::string(static_cast<std::size_t>(-e - 1), '0') + mant;
        while (!frac.empty() && frac.back() == '0') frac.pop_back();
        body = "0." + frac;
    }
    return out + body;
}

inline std::string to_decimal(double v, int digits = 12) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

template <class T>
std::string to_decimal(const extended<T>& v, int digits = 12) {
    if (v.is_pos_inf()) return "inf";
    if (v.is_neg_inf()) return "-inf";
    return to_decimal(v.value(), digits);
}

/// Converts between scalar types (rational -> double is the common case).
template <class To, class From>
To scalar_cast(const From& v) {
    if constexpr (std::is_same_v<To, From>) {
        return v;
    } else if constexpr (std::is_same_v<To, double>) {
        return to_double(v);
    } else {
        return To(v);
    }
}

}  // namespace gps
