#pragma once

#include "oracle.hpp"
#include "tariffsim/billing.hpp"

#include <random>
#include <string>
#include <vector>

namespace fixtures {

using namespace tariffsim;

inline TariffSchedule from_tiers(const oracle::Tiers& tiers, Rational base_period_days = 30,
                                 bool allow_regressive = false) {
    ScheduleDescription raw;
    raw.currency = "KRW";
    raw.base_period_days = std::move(base_period_days);
    raw.allow_regressive = allow_regressive;
    for (const auto& t : tiers) raw.tiers.push_back({t.upper, t.rate});
    return validate_schedule(raw);
}

inline TariffSchedule kepco() { return from_tiers(oracle::kepco_monthly()); }

/// The residential table as a slot schedule for 6-hour slots in a 30-day month.
inline TariffSchedule kepco_slot() { return scale_schedule(kepco(), slot_factor(6, 30)); }

inline Energy kwh(long long num, long long den = 1) { return Energy(Rational(num, den)); }

inline SlotUsageVector usage_vector(const std::vector<Rational>& values) {
    SlotUsageVector out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.push_back({ConsumerId("c" + std::to_string(i)), Energy(values[i])});
    }
    return out;
}

/// Three usages: 5/2, 5/3, 5/6 kWh in one 6-hour slot.
inline SlotUsageVector three_consumer_usages() { return usage_vector({Rational(5, 2), Rational(5, 3), Rational(5, 6)}); }

/// Deterministic generator of random rationals and schedules.
class Random {
public:
    explicit Random(std::uint64_t seed) : rng_(seed) {}

    long long integer(long long lo, long long hi) { return std::uniform_int_distribution<long long>(lo, hi)(rng_); }

    /// Non-negative rational with numerator in [0, max_num] and denominator in [1, max_den].
    Rational rational(long long max_num, long long max_den) {
        return Rational(integer(0, max_num), integer(1, max_den));
    }

    Rational positive_rational(long long max_num, long long max_den) {
        return Rational(integer(1, max_num), integer(1, max_den));
    }

    /// Random valid tier table with 1..max_tiers tiers. Rates are
    /// non-decreasing unless `regressive` is set.
    oracle::Tiers tiers(std::size_t max_tiers, bool regressive = false) {
        const auto count = static_cast<std::size_t>(integer(1, static_cast<long long>(max_tiers)));
        oracle::Tiers out;
        Rational bound = 0;
        Rational rate = rational(100, 10);
        for (std::size_t i = 0; i < count; ++i) {
            if (i + 1 < count) {
                bound += positive_rational(200, 7);
                out.push_back({bound, rate});
            } else {
                out.push_back({std::nullopt, rate});
            }
            if (regressive) {
                rate = rational(500, 10);
            } else {
                rate += rational(300, 10);
            }
        }
        return out;
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace fixtures
