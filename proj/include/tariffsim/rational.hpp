#pragma once

// Exact rational arithmetic and decimal text conversion.
//
// Every quantity in the engine (energy, money, rates, scale factors) is an
// arbitrary-precision rational. Binary floating point never enters the core;
// conversion to decimal text is always an explicit, rounding step.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tariffsim {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Raised for malformed decimal or fraction text.
class NumberFormatError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline Integer pow10(std::size_t places) {
    Integer p = 1;
    for (std::size_t i = 0; i < places; ++i) p *= 10;
    return p;
}

/// Floor of a rational (towards negative infinity).
inline Integer floor_integer(const Rational& r) {
    Integer num = boost::multiprecision::numerator(r);
    const Integer den = boost::multiprecision::denominator(r);
    Integer q = num / den;  // truncates towards zero
    if (num < 0 && q * den != num) --q;
    return q;
}

/// Rounds to `places` decimals, half away from zero, returned as an integer
/// count of 10^-places units. For non-negative inputs this is round-half-up.
inline Integer round_to_units(const Rational& r, std::size_t places) {
    const Rational scaled = r * Rational(pow10(places));
    if (scaled >= 0) return floor_integer(scaled + Rational(1, 2));
    return -floor_integer(-scaled + Rational(1, 2));
}

/// Formats an integer count of 10^-places units as fixed-point decimal text.
inline std::string format_units(const Integer& units, std::size_t places) {
    const bool negative = units < 0;
    std::string digits = (negative ? Integer(-units) : units).str();
    if (digits.size() <= places) digits.insert(0, places + 1 - digits.size(), '0');
    std::string out = negative ? "-" : "";
    out += digits.substr(0, digits.size() - places);
    if (places > 0) {
        out += '.';
        out += digits.substr(digits.size() - places);
    }
    return out;
}

/// Fixed-point display text, e.g. to_fixed(5/6, 4) == "0.8333".
inline std::string to_fixed(const Rational& r, std::size_t places) {
    return format_units(round_to_units(r, places), places);
}

/// True when the rational has a finite decimal expansion (denominator 2^a 5^b).
inline bool is_terminating_decimal(const Rational& r) {
    Integer den = boost::multiprecision::denominator(r);
    while (den % 2 == 0) den /= 2;
    while (den % 5 == 0) den /= 5;
    return den == 1;
}

/// Number of decimals needed to write a terminating rational exactly.
inline std::size_t exact_decimal_places(const Rational& r) {
    Integer den = boost::multiprecision::denominator(r);
    std::size_t twos = 0;
    std::size_t fives = 0;
    while (den % 2 == 0) { den /= 2; ++twos; }
    while (den % 5 == 0) { den /= 5; ++fives; }
    if (den != 1) throw std::domain_error("rational has no finite decimal expansion");
    return std::max(twos, fives);
}

/// Shortest exact decimal text ("60.7", "100", "0.25"). Throws for values
/// such as 5/3 that have no finite expansion.
inline std::string to_exact_decimal(const Rational& r) {
    const std::size_t places = exact_decimal_places(r);
    return format_units(round_to_units(r, places), places);
}

/// "p/q" text, or just "p" for integers.
inline std::string to_fraction(const Rational& r) {
    const Integer& den = boost::multiprecision::denominator(r);
    if (den == 1) return boost::multiprecision::numerator(r).str();
    return boost::multiprecision::numerator(r).str() + "/" + den.str();
}

/// Exact decimal when terminating, otherwise fixed with `fallback_places`.
inline std::string to_display(const Rational& r, std::size_t fallback_places = 6) {
    return is_terminating_decimal(r) ? to_exact_decimal(r) : to_fixed(r, fallback_places);
}

namespace detail {

inline Integer parse_digits(std::string_view digits, std::string_view whole) {
    if (digits.empty()) throw NumberFormatError("malformed number '" + std::string(whole) + "'");
    Integer value = 0;
    for (char c : digits) {
        if (c < '0' || c > '9') throw NumberFormatError("malformed number '" + std::string(whole) + "'");
        value = value * 10 + (c - '0');
    }
    return value;
}

}  // namespace detail

/// Parses plain decimal text exactly: "60.7" -> 607/10, "-1", "+0.25", ".5".
/// Exponents and non-ASCII digits are rejected.
inline Rational parse_decimal(std::string_view text) {
    const std::string_view whole = text;
    bool negative = false;
    if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    const auto dot = text.find('.');
    Rational value;
    if (dot == std::string_view::npos) {
        value = Rational(detail::parse_digits(text, whole));
    } else {
        const std::string_view int_part = text.substr(0, dot);
        const std::string_view frac_part = text.substr(dot + 1);
        if (int_part.empty() && frac_part.empty()) {
            throw NumberFormatError("malformed number '" + std::string(whole) + "'");
        }
        const Integer ip = int_part.empty() ? Integer(0) : detail::parse_digits(int_part, whole);
        const Integer fp = frac_part.empty() ? Integer(0) : detail::parse_digits(frac_part, whole);
        value = Rational(ip) + Rational(fp, pow10(frac_part.size()));
    }
    return negative ? Rational(-value) : value;
}

/// Parses either decimal text or an exact "p/q" fraction ("5/3").
inline Rational parse_rational(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return parse_decimal(text);
    const Rational num = parse_decimal(text.substr(0, slash));
    const std::string_view den_text = text.substr(slash + 1);
    const Integer den = detail::parse_digits(den_text, text);
    if (boost::multiprecision::denominator(num) != 1) {
        throw NumberFormatError("fraction numerator must be an integer in '" + std::string(text) + "'");
    }
    if (den == 0) throw NumberFormatError("zero denominator in '" + std::string(text) + "'");
    return num / Rational(den);
}

}  // namespace tariffsim
