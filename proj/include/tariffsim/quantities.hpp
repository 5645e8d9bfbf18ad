#pragma once

// Strong types for the quantities the tariff engine manipulates.

#include "tariffsim/rational.hpp"

#include <compare>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace tariffsim {

/// Raised when a quantity would leave its valid domain (negative energy,
/// non-positive scale factor, mixed currencies).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Energy in kWh. Always non-negative and exact.
class Energy {
public:
    Energy() = default;
    explicit Energy(Rational kwh) : kwh_(std::move(kwh)) {
        if (kwh_ < 0) throw DomainError("energy must be non-negative, got " + to_fraction(kwh_));
    }

    static Energy from_text(std::string_view text) { return Energy(parse_rational(text)); }

    const Rational& kwh() const { return kwh_; }
    bool is_zero() const { return kwh_ == 0; }

    Energy& operator+=(const Energy& other) {
        kwh_ += other.kwh_;
        return *this;
    }
    friend Energy operator+(Energy a, const Energy& b) { return a += b; }
    /// Saturation is not applied; subtracting a larger amount throws.
    friend Energy operator-(const Energy& a, const Energy& b) { return Energy(a.kwh_ - b.kwh_); }

    friend bool operator==(const Energy&, const Energy&) = default;
    friend std::strong_ordering operator<=>(const Energy& a, const Energy& b) {
        if (a.kwh_ < b.kwh_) return std::strong_ordering::less;
        if (b.kwh_ < a.kwh_) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

    /// Display form, 4 decimals half-up ("0.8333").
    std::string display() const { return to_fixed(kwh_, 4); }

private:
    Rational kwh_{0};
};

/// Price per kWh.
class Rate {
public:
    Rate() = default;
    explicit Rate(Rational per_kwh) : per_kwh_(std::move(per_kwh)) {
        if (per_kwh_ < 0) throw DomainError("rate must be non-negative, got " + to_fraction(per_kwh_));
    }

    const Rational& per_kwh() const { return per_kwh_; }

    friend bool operator==(const Rate&, const Rate&) = default;
    friend bool operator<(const Rate& a, const Rate& b) { return a.per_kwh_ < b.per_kwh_; }

private:
    Rational per_kwh_{0};
};

/// Strictly positive multiplier applied to tier bounds.
class ScaleFactor {
public:
    explicit ScaleFactor(Rational value) : value_(std::move(value)) {
        if (value_ <= 0) throw DomainError("scale factor must be positive, got " + to_fraction(value_));
    }

    const Rational& value() const { return value_; }

    friend ScaleFactor operator*(const ScaleFactor& a, const ScaleFactor& b) {
        return ScaleFactor(a.value_ * b.value_);
    }
    friend bool operator==(const ScaleFactor&, const ScaleFactor&) = default;

private:
    Rational value_;
};

/// Money amount rounded to minor units (2 decimals) for display and billing.
struct DisplayMoney {
    Integer minor_units{0};

    std::string str() const { return format_units(minor_units, 2); }
    Rational value() const { return Rational(minor_units, 100); }

    friend bool operator==(const DisplayMoney&, const DisplayMoney&) = default;
    friend DisplayMoney operator+(const DisplayMoney& a, const DisplayMoney& b) {
        return {a.minor_units + b.minor_units};
    }
    friend DisplayMoney operator-(const DisplayMoney& a, const DisplayMoney& b) {
        return {a.minor_units - b.minor_units};
    }
};

inline std::ostream& operator<<(std::ostream& os, const DisplayMoney& m) { return os << m.str(); }

/// Exact, unrounded money amount. Values are signed so that deltas between
/// reports can be expressed; every price the engine produces is non-negative.
class Money {
public:
    Money() = default;
    explicit Money(Rational value, std::string currency = {})
        : value_(std::move(value)), currency_(std::move(currency)) {}

    const Rational& value() const { return value_; }
    const std::string& currency() const { return currency_; }

    Money& operator+=(const Money& other) {
        check_currency(other);
        value_ += other.value_;
        if (currency_.empty()) currency_ = other.currency_;
        return *this;
    }
    friend Money operator+(Money a, const Money& b) { return a += b; }
    friend Money operator-(const Money& a, const Money& b) {
        a.check_currency(b);
        return Money(a.value_ - b.value_, a.currency_.empty() ? b.currency_ : a.currency_);
    }

    friend bool operator==(const Money& a, const Money& b) {
        return a.value_ == b.value_ && (a.currency_ == b.currency_ || a.currency_.empty() || b.currency_.empty());
    }

    std::string str() const { return to_fixed(value_, 2); }

private:
    void check_currency(const Money& other) const {
        if (!currency_.empty() && !other.currency_.empty() && currency_ != other.currency_) {
            throw DomainError("currency mismatch: " + currency_ + " vs " + other.currency_);
        }
    }

    Rational value_{0};
    std::string currency_;
};

/// Half-up rounding to minor units; the only way money leaves exact form.
inline DisplayMoney round_money(const Money& amount) {
    return {round_to_units(amount.value(), 2)};
}

inline DisplayMoney round_money(const Rational& amount) { return {round_to_units(amount, 2)}; }

inline std::ostream& operator<<(std::ostream& os, const Money& m) { return os << to_fraction(m.value()); }
inline std::ostream& operator<<(std::ostream& os, const Energy& e) { return os << to_fraction(e.kwh()); }

}  // namespace tariffsim
