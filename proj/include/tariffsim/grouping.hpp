#pragma once

// Collective pricing of a consumer group within one slot, and allocation of
// the group price back to the members.

#include "tariffsim/tariff.hpp"

#include <algorithm>
#include <compare>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace tariffsim {

class ConsumerId {
public:
    ConsumerId() = default;
    explicit ConsumerId(std::string id) : id_(std::move(id)) {
        if (id_.empty()) throw DomainError("consumer id must be non-empty");
    }

    const std::string& str() const { return id_; }

    friend bool operator==(const ConsumerId&, const ConsumerId&) = default;
    friend std::strong_ordering operator<=>(const ConsumerId&, const ConsumerId&) = default;

private:
    std::string id_;
};

struct ConsumerUsage {
    ConsumerId consumer;
    Energy energy;
};

/// One slot's consumption, one entry per group member.
using SlotUsageVector = std::vector<ConsumerUsage>;

struct ConsumerCharge {
    ConsumerId consumer;
    Money price;
};

/// Throws if two entries share a consumer id.
inline void check_distinct(const SlotUsageVector& usages) {
    std::set<std::string> seen;
    for (const auto& u : usages) {
        if (!seen.insert(u.consumer.str()).second) {
            throw DomainError("duplicate consumer id '" + u.consumer.str() + "'");
        }
    }
}

/// Each member priced on its own under the slot schedule.
inline std::vector<ConsumerCharge> individual_slot_prices(const TariffSchedule& slot_schedule,
                                                          const SlotUsageVector& usages) {
    check_distinct(usages);
    std::vector<ConsumerCharge> out;
    out.reserve(usages.size());
    for (const auto& u : usages) out.push_back({u.consumer, progressive_price(slot_schedule, u.energy)});
    return out;
}

/// Pooled consumption priced under the slot schedule with tier ranges
/// widened by the roster size. Members with zero usage still count.
inline Money group_slot_price(const TariffSchedule& slot_schedule, const SlotUsageVector& usages) {
    if (usages.empty()) throw DomainError("group price needs at least one consumer");
    check_distinct(usages);
    Energy pooled;
    for (const auto& u : usages) pooled += u.energy;
    const auto group_schedule =
        scale_schedule(slot_schedule, ScaleFactor(Rational(static_cast<long long>(usages.size()))));
    return progressive_price(group_schedule, pooled);
}

enum class AllocationPolicy {
    /// Each raw share rounded half-up on its own; the sum may drift from the
    /// rounded group price by up to N/2 minor units.
    independent_rounding,
    /// Largest-remainder rounding; shares sum to the rounded group price.
    exact_sum,
};

inline std::string to_string(AllocationPolicy policy) {
    return policy == AllocationPolicy::exact_sum ? "exact-sum" : "independent";
}

struct AllocatedShare {
    ConsumerId consumer;
    Rational raw_share;   // exact proportional share
    DisplayMoney amount;  // billed amount under the policy
};

struct ReconciliationAdjustment {
    ConsumerId consumer;
    long minor_units;  // +1 for each unit handed out by largest remainder
};

struct AllocationResult {
    AllocationPolicy policy;
    std::vector<AllocatedShare> shares;
    std::vector<ReconciliationAdjustment> adjustments;

    DisplayMoney total() const {
        DisplayMoney sum;
        for (const auto& s : shares) sum = sum + s.amount;
        return sum;
    }
};

/// Splits `group_price` across members in proportion to their stand-alone
/// prices. With all-zero individual prices only a zero group price can be
/// split (everyone gets zero); anything else is an error.
inline AllocationResult proportional_allocation(const Money& group_price,
                                                const std::vector<ConsumerCharge>& individual_prices,
                                                AllocationPolicy policy) {
    if (group_price.value() < 0) throw DomainError("group price must be non-negative");
    std::set<std::string> seen;
    Rational individual_total = 0;
    for (const auto& c : individual_prices) {
        if (c.price.value() < 0) throw DomainError("individual price of '" + c.consumer.str() + "' is negative");
        if (!seen.insert(c.consumer.str()).second) {
            throw DomainError("duplicate consumer id '" + c.consumer.str() + "'");
        }
        individual_total += c.price.value();
    }
    if (individual_total == 0 && group_price.value() != 0) {
        throw DomainError("cannot allocate a non-zero group price when every individual price is zero");
    }

    AllocationResult result{policy, {}, {}};
    result.shares.reserve(individual_prices.size());
    for (const auto& c : individual_prices) {
        Rational raw = individual_total == 0 ? Rational(0) : group_price.value() * c.price.value() / individual_total;
        result.shares.push_back({c.consumer, std::move(raw), {}});
    }

    if (policy == AllocationPolicy::independent_rounding) {
        for (auto& s : result.shares) s.amount = round_money(s.raw_share);
        return result;
    }

    // Floor every share to minor units, then hand the shortfall out one unit
    // at a time by descending remainder, ties by consumer id.
    std::vector<Rational> remainders;
    remainders.reserve(result.shares.size());
    Integer floored_total = 0;
    for (auto& s : result.shares) {
        const Rational in_units = s.raw_share * 100;
        s.amount.minor_units = floor_integer(in_units);
        remainders.push_back(in_units - Rational(s.amount.minor_units));
        floored_total += s.amount.minor_units;
    }
    Integer shortfall = round_money(group_price).minor_units - floored_total;

    std::vector<std::size_t> order(result.shares.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (remainders[a] != remainders[b]) return remainders[a] > remainders[b];
        return result.shares[a].consumer < result.shares[b].consumer;
    });
    for (std::size_t k = 0; shortfall > 0 && k < order.size(); ++k, --shortfall) {
        auto& s = result.shares[order[k]];
        s.amount.minor_units += 1;
        result.adjustments.push_back({s.consumer, 1});
    }
    if (shortfall != 0) {
        // Σ floor(share) > group - N, so the shortfall never exceeds N.
        throw std::logic_error("largest-remainder allocation left a residual");
    }
    return result;
}

struct GroupPricingResult {
    Money group_price;
    std::vector<ConsumerCharge> individual_prices;
    Money individual_total;
    Money saving;  // individual_total - group_price

    /// Saving as it shows on the bills: rounded individual prices summed, minus
    /// the rounded group price.
    DisplayMoney billed_saving() const {
        DisplayMoney individual;
        for (const auto& c : individual_prices) individual = individual + round_money(c.price);
        return individual - round_money(group_price);
    }
};

inline GroupPricingResult group_saving(const TariffSchedule& slot_schedule, const SlotUsageVector& usages) {
    GroupPricingResult result;
    result.group_price = group_slot_price(slot_schedule, usages);
    result.individual_prices = individual_slot_prices(slot_schedule, usages);
    result.individual_total = Money(0, slot_schedule.currency());
    for (const auto& c : result.individual_prices) result.individual_total += c.price;
    result.saving = result.individual_total - result.group_price;
    return result;
}

}  // namespace tariffsim
