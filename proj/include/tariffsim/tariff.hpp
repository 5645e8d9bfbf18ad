#pragma once

// Progressive (block) tariffs: validation, pricing, per-tier breakdown and
// exact rescaling of tier ranges for shorter slots or pooled groups.

#include "tariffsim/quantities.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tariffsim {

/// Raised by validate_schedule; the message names the offending tier.
class ScheduleError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TariffTier {
    std::optional<Energy> upper_bound;  // nullopt: unbounded (last tier only)
    Rate rate;

    bool unbounded() const { return !upper_bound.has_value(); }
    friend bool operator==(const TariffTier&, const TariffTier&) = default;
};

/// Unvalidated schedule as read from a file or built in code. Values are
/// plain rationals so that negative inputs can be reported instead of
/// throwing from a constructor.
struct ScheduleDescription {
    struct Tier {
        std::optional<Rational> upper_kwh;
        Rational rate;
    };

    std::string currency = "KRW";
    Rational base_period_days{30};
    std::vector<Tier> tiers;
    bool allow_regressive = false;
};

class TariffSchedule {
public:
    const std::vector<TariffTier>& tiers() const { return tiers_; }
    const std::string& currency() const { return currency_; }
    /// Length of the billing period the unscaled tier ranges were quoted for.
    const Rational& base_period_days() const { return base_period_days_; }
    /// Cumulative factor applied to the quoted tier ranges (1 when unscaled).
    const Rational& scale() const { return scale_; }
    bool regressive_allowed() const { return allow_regressive_; }

    /// True when rates never decrease from one tier to the next.
    bool is_convex() const {
        for (std::size_t i = 1; i < tiers_.size(); ++i) {
            if (tiers_[i].rate < tiers_[i - 1].rate) return false;
        }
        return true;
    }

    friend bool operator==(const TariffSchedule&, const TariffSchedule&) = default;

private:
    friend TariffSchedule validate_schedule(const ScheduleDescription& raw);
    friend TariffSchedule scale_schedule(const TariffSchedule& schedule, const ScaleFactor& factor);

    TariffSchedule() = default;

    std::vector<TariffTier> tiers_;
    std::string currency_;
    Rational base_period_days_{30};
    Rational scale_{1};
    bool allow_regressive_ = false;
};

inline TariffSchedule validate_schedule(const ScheduleDescription& raw) {
    if (raw.tiers.empty()) throw ScheduleError("schedule has no tiers");
    if (raw.base_period_days <= 0) throw ScheduleError("base period must be positive");
    if (raw.currency.empty()) throw ScheduleError("currency code is empty");

    TariffSchedule schedule;
    schedule.currency_ = raw.currency;
    schedule.base_period_days_ = raw.base_period_days;
    schedule.allow_regressive_ = raw.allow_regressive;

    Rational previous_bound = 0;
    for (std::size_t i = 0; i < raw.tiers.size(); ++i) {
        const auto& tier = raw.tiers[i];
        const std::string where = "tier " + std::to_string(i + 1);
        const bool last = i + 1 == raw.tiers.size();

        if (tier.rate < 0) throw ScheduleError(where + ": negative rate " + to_display(tier.rate));
        if (tier.upper_kwh) {
            if (*tier.upper_kwh < 0) {
                throw ScheduleError(where + ": negative upper bound " + to_display(*tier.upper_kwh));
            }
            if (last) throw ScheduleError(where + ": last tier must be unbounded");
            if (*tier.upper_kwh <= previous_bound) {
                throw ScheduleError(where + ": non-increasing bounds (" + to_display(*tier.upper_kwh) +
                                    " after " + to_display(previous_bound) + ")");
            }
            previous_bound = *tier.upper_kwh;
        } else if (!last) {
            throw ScheduleError(where + ": only the last tier may be unbounded");
        }

        if (i > 0 && tier.rate < raw.tiers[i - 1].rate && !raw.allow_regressive) {
            throw ScheduleError(where + ": decreasing rate " + to_display(tier.rate) + " after " +
                                to_display(raw.tiers[i - 1].rate) + " (needs regressive override)");
        }

        TariffTier out;
        if (tier.upper_kwh) out.upper_bound = Energy(*tier.upper_kwh);
        out.rate = Rate(tier.rate);
        schedule.tiers_.push_back(std::move(out));
    }
    return schedule;
}

/// Converts a valid schedule back into its description form.
inline ScheduleDescription describe(const TariffSchedule& schedule) {
    ScheduleDescription raw;
    raw.currency = schedule.currency();
    raw.base_period_days = schedule.base_period_days();
    raw.allow_regressive = schedule.regressive_allowed();
    for (const auto& tier : schedule.tiers()) {
        ScheduleDescription::Tier t;
        if (tier.upper_bound) t.upper_kwh = tier.upper_bound->kwh();
        t.rate = tier.rate.per_kwh();
        raw.tiers.push_back(std::move(t));
    }
    return raw;
}

struct TierCharge {
    std::size_t tier;  // 1-based, as tariffs are usually quoted
    Energy energy;
    Money charge;

    friend bool operator==(const TierCharge&, const TierCharge&) = default;
};

/// Energy and charge falling into each tier; tiers with no energy are omitted.
inline std::vector<TierCharge> tier_breakdown(const TariffSchedule& schedule, const Energy& usage) {
    std::vector<TierCharge> out;
    Rational lower = 0;
    const Rational& total = usage.kwh();
    for (std::size_t i = 0; i < schedule.tiers().size() && lower < total; ++i) {
        const auto& tier = schedule.tiers()[i];
        const Rational upper = tier.upper_bound && tier.upper_bound->kwh() < total ? tier.upper_bound->kwh() : total;
        Rational in_tier = upper - lower;
        Rational charge = in_tier * tier.rate.per_kwh();
        out.push_back({i + 1, Energy(std::move(in_tier)), Money(std::move(charge), schedule.currency())});
        lower = upper;
    }
    return out;
}

/// Exact progressive price of `usage`: sum over tiers of rate times the
/// energy inside that tier's range.
inline Money progressive_price(const TariffSchedule& schedule, const Energy& usage) {
    Rational price = 0;
    Rational lower = 0;
    const Rational& total = usage.kwh();
    for (const auto& tier : schedule.tiers()) {
        if (lower >= total) break;
        if (tier.upper_bound && tier.upper_bound->kwh() < total) {
            price += (tier.upper_bound->kwh() - lower) * tier.rate.per_kwh();
            lower = tier.upper_bound->kwh();
        } else {
            price += (total - lower) * tier.rate.per_kwh();
            break;
        }
    }
    return Money(std::move(price), schedule.currency());
}

/// Multiplies every bounded tier limit by `factor`. Rates are unchanged.
inline TariffSchedule scale_schedule(const TariffSchedule& schedule, const ScaleFactor& factor) {
    TariffSchedule scaled = schedule;
    for (auto& tier : scaled.tiers_) {
        if (tier.upper_bound) tier.upper_bound = Energy(tier.upper_bound->kwh() * factor.value());
    }
    scaled.scale_ *= factor.value();
    return scaled;
}

/// Factor converting tier ranges quoted per billing period to one slot:
/// slot_hours / (24 * days_per_period). A slot must tile a day exactly.
inline ScaleFactor slot_factor(const Rational& slot_hours, long days_per_period = 30) {
    if (slot_hours <= 0) throw DomainError("slot length must be positive");
    if (days_per_period <= 0) throw DomainError("days per period must be positive");
    const Rational slots_per_day = Rational(24) / slot_hours;
    if (boost::multiprecision::denominator(slots_per_day) != 1) {
        throw DomainError("slot length " + to_display(slot_hours) + " h does not divide 24 h");
    }
    return ScaleFactor(slot_hours / Rational(24 * days_per_period));
}

}  // namespace tariffsim
