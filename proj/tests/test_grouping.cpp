#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace {

using namespace tariffsim;
using fixtures::kwh;

std::vector<std::string> displayed(const std::vector<ConsumerCharge>& charges) {
    std::vector<std::string> out;
    for (const auto& c : charges) out.push_back(round_money(c.price).str());
    return out;
}

std::vector<std::string> displayed(const AllocationResult& a) {
    std::vector<std::string> out;
    for (const auto& s : a.shares) out.push_back(s.amount.str());
    return out;
}

std::vector<ConsumerCharge> charges(const std::vector<const char*>& values) {
    std::vector<ConsumerCharge> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.push_back({ConsumerId("c" + std::to_string(i)), Money(parse_decimal(values[i]), "KRW")});
    }
    return out;
}

TEST(IndividualSlotPrices, ThreeConsumerSlot) {
    const auto prices = individual_slot_prices(fixtures::kepco_slot(), fixtures::three_consumer_usages());
    EXPECT_EQ(displayed(prices), (std::vector<std::string>{"312.08", "155.50", "50.58"}));
    EXPECT_EQ(prices[1].price.value(), Rational(311, 2));  // (5/6)(60.7 + 125.9)
}

TEST(IndividualSlotPrices, ZeroAndSingleton) {
    const auto zeros = individual_slot_prices(fixtures::kepco_slot(), fixtures::usage_vector({0, 0, 0}));
    for (const auto& c : zeros) EXPECT_EQ(c.price.value(), Rational(0));

    const auto one = individual_slot_prices(fixtures::kepco_slot(), fixtures::usage_vector({Rational(7, 4)}));
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].price, progressive_price(fixtures::kepco_slot(), kwh(7, 4)));
}

TEST(IndividualSlotPrices, DuplicateIds) {
    SlotUsageVector v{{ConsumerId("a"), kwh(1)}, {ConsumerId("a"), kwh(2)}};
    EXPECT_THROW(individual_slot_prices(fixtures::kepco_slot(), v), DomainError);
    EXPECT_THROW(group_slot_price(fixtures::kepco_slot(), v), DomainError);
}

TEST(GroupSlotPrice, ThreeConsumerSlot) {
    const Money g = group_slot_price(fixtures::kepco_slot(), fixtures::three_consumer_usages());
    EXPECT_EQ(g.value(), Rational(5, 2) * Rational(607, 10) + Rational(5, 2) * Rational(1259, 10));
    EXPECT_EQ(round_money(g).str(), "466.50");
    // pooled 5 kWh against group bounds 5/2, 5, ... splits evenly over two tiers
    const auto rows = tier_breakdown(scale_schedule(fixtures::kepco_slot(), ScaleFactor(3)), kwh(5));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].energy, kwh(5, 2));
    EXPECT_EQ(rows[1].energy, kwh(5, 2));
}

TEST(GroupSlotPrice, DegenerateGroups) {
    EXPECT_THROW(group_slot_price(fixtures::kepco_slot(), {}), DomainError);
    const auto single = fixtures::usage_vector({Rational(9, 4)});
    EXPECT_EQ(group_slot_price(fixtures::kepco_slot(), single), progressive_price(fixtures::kepco_slot(), kwh(9, 4)));
    for (int n = 1; n <= 8; ++n) {
        const auto equal = fixtures::usage_vector(std::vector<Rational>(n, Rational(13, 7)));
        EXPECT_EQ(group_slot_price(fixtures::kepco_slot(), equal).value(),
                  Rational(n) * progressive_price(fixtures::kepco_slot(), kwh(13, 7)).value());
    }
}

TEST(GroupSlotPrice, InactiveMembersWidenTiers) {
    // Zero-usage members still count towards the roster size.
    const auto active_only = fixtures::usage_vector({Rational(3, 2)});
    const auto with_idle = fixtures::usage_vector({Rational(3, 2), Rational(0)});
    EXPECT_LT(group_slot_price(fixtures::kepco_slot(), with_idle).value(),
              group_slot_price(fixtures::kepco_slot(), active_only).value());
    EXPECT_EQ(group_slot_price(fixtures::kepco_slot(), with_idle).value(), Rational(3, 2) * Rational(607, 10));
}

TEST(ProportionalAllocation, IndependentRoundingReproducesDisplayedShares) {
    const auto r = proportional_allocation(Money(Rational(93300, 200), "KRW"), charges({"312.08", "155.50", "50.58"}),
                                           AllocationPolicy::independent_rounding);
    EXPECT_EQ(displayed(r), (std::vector<std::string>{"280.97", "140.00", "45.54"}));
    EXPECT_EQ(r.total().str(), "466.51");
    EXPECT_TRUE(r.adjustments.empty());
}

TEST(ProportionalAllocation, ExactSumLargestRemainder) {
    const auto r = proportional_allocation(Money(parse_decimal("466.50"), "KRW"), charges({"312.08", "155.50", "50.58"}),
                                           AllocationPolicy::exact_sum);
    // raw 280.9653 / 139.9968 / 45.5379: floors leave 2 units for the two
    // largest remainders (45.53.. and 139.99..)
    EXPECT_EQ(displayed(r), (std::vector<std::string>{"280.96", "140.00", "45.54"}));
    EXPECT_EQ(r.total().str(), "466.50");
    ASSERT_EQ(r.adjustments.size(), 2u);
    EXPECT_EQ(r.adjustments[0].consumer.str(), "c2");
    EXPECT_EQ(r.adjustments[1].consumer.str(), "c1");
}

TEST(ProportionalAllocation, ExactIndividualPrices) {
    // Proportions from unrounded individual prices.
    const auto slot = fixtures::kepco_slot();
    const auto usages = fixtures::three_consumer_usages();
    const Money group = group_slot_price(slot, usages);
    const auto individual = individual_slot_prices(slot, usages);
    const auto indep = proportional_allocation(group, individual, AllocationPolicy::independent_rounding);
    EXPECT_EQ(displayed(indep), (std::vector<std::string>{"280.97", "140.00", "45.54"}));
    const auto exact = proportional_allocation(group, individual, AllocationPolicy::exact_sum);
    EXPECT_EQ(displayed(exact), (std::vector<std::string>{"280.97", "139.99", "45.54"}));
    EXPECT_EQ(exact.total().str(), "466.50");
}

TEST(ProportionalAllocation, ZeroGroup) {
    for (auto policy : {AllocationPolicy::independent_rounding, AllocationPolicy::exact_sum}) {
        const auto r = proportional_allocation(Money(0), charges({"0", "0", "0"}), policy);
        EXPECT_EQ(displayed(r), (std::vector<std::string>{"0.00", "0.00", "0.00"}));
    }
    EXPECT_THROW(proportional_allocation(Money(1), charges({"0", "0"}), AllocationPolicy::exact_sum), DomainError);
}

TEST(ProportionalAllocation, SingleConsumer) {
    for (auto policy : {AllocationPolicy::independent_rounding, AllocationPolicy::exact_sum}) {
        const auto r = proportional_allocation(Money(parse_decimal("77.125")), charges({"90"}), policy);
        ASSERT_EQ(r.shares.size(), 1u);
        EXPECT_EQ(r.shares[0].raw_share, parse_decimal("77.125"));
        EXPECT_EQ(r.shares[0].amount.str(), "77.13");
    }
}

TEST(ProportionalAllocation, TiesBreakByConsumerId) {
    // Three equal shares of 0.10: 3.333.. minor units each, one unit left over.
    std::vector<ConsumerCharge> in{{ConsumerId("zeta"), Money(1)}, {ConsumerId("alpha"), Money(1)},
                                   {ConsumerId("mid"), Money(1)}};
    const auto r = proportional_allocation(Money(Rational(1, 10)), in, AllocationPolicy::exact_sum);
    ASSERT_EQ(r.adjustments.size(), 1u);
    EXPECT_EQ(r.adjustments[0].consumer.str(), "alpha");
    EXPECT_EQ(r.shares[1].amount.str(), "0.04");
    EXPECT_EQ(r.total().str(), "0.10");
}

TEST(ProportionalAllocation, RejectsBadInput) {
    EXPECT_THROW(proportional_allocation(Money(-1), charges({"1"}), AllocationPolicy::exact_sum), DomainError);
    EXPECT_THROW(proportional_allocation(Money(1), charges({"-1", "2"}), AllocationPolicy::exact_sum), DomainError);
}

TEST(GroupSaving, ThreeConsumerSlot) {
    const auto r = group_saving(fixtures::kepco_slot(), fixtures::three_consumer_usages());
    EXPECT_EQ(round_money(r.group_price).str(), "466.50");
    EXPECT_EQ(r.billed_saving().str(), "51.66");  // 518.16 - 466.50
    EXPECT_EQ(r.saving.value(), Rational(155, 3));
    EXPECT_EQ(r.saving.value(), r.individual_total.value() - r.group_price.value());
}

TEST(GroupSaving, SameSegmentHasNoSaving) {
    const auto r = group_saving(fixtures::kepco_slot(), fixtures::usage_vector({Rational(1, 2), Rational(1, 2)}));
    EXPECT_EQ(r.saving.value(), Rational(0));
}

TEST(GroupSaving, IdlePartnerCreatesSaving) {
    // usages 0 and 2 kWh: alone the 2 kWh spans Tiers 1-3, pooled it stays in Tiers 1-2.
    const auto r = group_saving(fixtures::kepco_slot(), fixtures::usage_vector({Rational(0), Rational(2)}));
    const auto tiers = oracle::kepco_monthly();
    const Rational alone = oracle::clamp_price(oracle::scaled(tiers, Rational(1, 120)), 2);
    const Rational pooled = oracle::clamp_price(oracle::scaled(tiers, Rational(2, 120)), 2);
    EXPECT_EQ(r.individual_total.value(), alone);
    EXPECT_EQ(r.group_price.value(), pooled);
    EXPECT_EQ(r.saving.value(), Rational(75));
    EXPECT_GT(r.saving.value(), 0);
}

// ---------------------------------------------------------------------------
// Properties
// ---------------------------------------------------------------------------

TEST(GroupingProperties, JensenPermutationAndDominance) {
    fixtures::Random rnd(21);
    for (int iter = 0; iter < 400; ++iter) {
        const auto s = fixtures::from_tiers(rnd.tiers(6));
        const auto n = static_cast<std::size_t>(rnd.integer(1, 8));
        std::vector<Rational> values;
        for (std::size_t i = 0; i < n; ++i) values.push_back(rnd.rational(600, 11));
        const auto usages = fixtures::usage_vector(values);

        const auto res = group_saving(s, usages);
        EXPECT_GE(res.saving.value(), 0);

        auto shuffled = usages;
        std::reverse(shuffled.begin(), shuffled.end());
        std::rotate(shuffled.begin(), shuffled.begin() + static_cast<long>(n / 2), shuffled.end());
        EXPECT_EQ(group_slot_price(s, shuffled), res.group_price);

        if (res.individual_total.value() == 0) continue;
        const auto alloc = proportional_allocation(res.group_price, res.individual_prices, AllocationPolicy::exact_sum);
        EXPECT_EQ(alloc.total(), round_money(res.group_price));
        const auto indep =
            proportional_allocation(res.group_price, res.individual_prices, AllocationPolicy::independent_rounding);
        const Integer drift = indep.total().minor_units - round_money(res.group_price).minor_units;
        EXPECT_LE(2 * (drift < 0 ? Integer(-drift) : drift), Integer(n));

        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_LE(alloc.shares[i].raw_share, res.individual_prices[i].price.value());
            if (res.individual_prices[i].price.value() == 0) {
                EXPECT_EQ(alloc.shares[i].raw_share, 0);
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (res.individual_prices[i].price.value() >= res.individual_prices[j].price.value()) {
                    EXPECT_GE(alloc.shares[i].raw_share, alloc.shares[j].raw_share);
                }
            }
        }
    }
}

TEST(GroupingProperties, EqualityWithinOneSegment) {
    // Usages u_i all inside one segment (lo, hi] of the slot schedule: the
    // pooled per-capita usage sits in the same segment, so no saving.
    const auto slot = fixtures::kepco_slot();
    fixtures::Random rnd(22);
    for (int iter = 0; iter < 200; ++iter) {
        const auto& tiers = slot.tiers();
        const auto seg = static_cast<std::size_t>(rnd.integer(0, 4));
        const Rational lo = seg == 0 ? Rational(0) : tiers[seg - 1].upper_bound->kwh();
        const Rational hi = tiers[seg].upper_bound->kwh();
        const auto n = static_cast<std::size_t>(rnd.integer(1, 8));
        std::vector<Rational> values;
        for (std::size_t i = 0; i < n; ++i) values.push_back(lo + (hi - lo) * Rational(rnd.integer(1, 97), 97));
        const auto res = group_saving(slot, fixtures::usage_vector(values));
        EXPECT_EQ(res.saving.value(), 0);
    }
}

}  // namespace
