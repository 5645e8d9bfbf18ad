#pragma once

// Batch billing over consumption traces: partition readings into slots, run
// the monthly / slotted / grouped schemes, and summarize demand.

#include "tariffsim/grouping.hpp"

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tariffsim {

using Timestamp = std::chrono::sys_seconds;

/// Energy consumed by one consumer over [start, start + duration).
struct MeterReading {
    ConsumerId consumer;
    Timestamp start;
    std::chrono::seconds duration{3600};
    Energy energy;
};

/// Division of one billing period into equal slots that tile each day.
class SlotGrid {
public:
    SlotGrid(Rational slot_hours, long period_days, Timestamp period_start = Timestamp{})
        : slot_hours_(std::move(slot_hours)), period_days_(period_days), period_start_(period_start) {
        // validates slot_hours | 24 and the positivity of both arguments
        (void)slot_factor(slot_hours_, period_days_);
    }

    const Rational& slot_hours() const { return slot_hours_; }
    long period_days() const { return period_days_; }
    Timestamp period_start() const { return period_start_; }

    std::size_t slots_per_day() const {
        return static_cast<std::size_t>(boost::multiprecision::numerator(Rational(24) / slot_hours_));
    }
    std::size_t slot_count() const { return slots_per_day() * static_cast<std::size_t>(period_days_); }
    Rational slot_seconds() const { return slot_hours_ * 3600; }
    Rational period_seconds() const { return Rational(period_days_) * 86400; }
    ScaleFactor factor() const { return slot_factor(slot_hours_, period_days_); }

private:
    Rational slot_hours_;
    long period_days_;
    Timestamp period_start_;
};

/// Consumers x slots grid of consumption. Rows are kept sorted by consumer
/// id; `observed` records which cells received at least one reading.
class SlotUsageMatrix {
public:
    SlotUsageMatrix() = default;

    SlotUsageMatrix(std::vector<ConsumerId> consumers, std::size_t slots)
        : consumers_(std::move(consumers)) {
        std::sort(consumers_.begin(), consumers_.end());
        for (std::size_t i = 1; i < consumers_.size(); ++i) {
            if (consumers_[i] == consumers_[i - 1]) {
                throw DomainError("duplicate consumer id '" + consumers_[i].str() + "'");
            }
        }
        slots_ = slots;
        cells_.assign(consumers_.size(), std::vector<Energy>(slots));
        observed_.assign(consumers_.size(), std::vector<bool>(slots, false));
    }

    /// Builds a fully observed matrix from explicit rows (ids need not be sorted).
    static SlotUsageMatrix from_rows(const std::vector<std::pair<ConsumerId, std::vector<Energy>>>& rows) {
        std::vector<ConsumerId> ids;
        std::size_t slots = rows.empty() ? 0 : rows.front().second.size();
        for (const auto& [id, row] : rows) {
            if (row.size() != slots) throw DomainError("rows have different slot counts");
            ids.push_back(id);
        }
        SlotUsageMatrix m(ids, slots);
        for (const auto& [id, row] : rows) {
            const std::size_t c = m.index_of(id);
            for (std::size_t t = 0; t < slots; ++t) {
                m.cells_[c][t] = row[t];
                m.observed_[c][t] = true;
            }
        }
        return m;
    }

    std::size_t consumer_count() const { return consumers_.size(); }
    std::size_t slot_count() const { return slots_; }
    const std::vector<ConsumerId>& consumers() const { return consumers_; }

    std::size_t index_of(const ConsumerId& id) const {
        const auto it = std::lower_bound(consumers_.begin(), consumers_.end(), id);
        if (it == consumers_.end() || *it != id) throw DomainError("unknown consumer '" + id.str() + "'");
        return static_cast<std::size_t>(it - consumers_.begin());
    }

    const Energy& at(std::size_t consumer, std::size_t slot) const { return cells_.at(consumer).at(slot); }
    bool observed(std::size_t consumer, std::size_t slot) const { return observed_.at(consumer).at(slot); }

    void add(std::size_t consumer, std::size_t slot, const Energy& energy) {
        cells_.at(consumer).at(slot) += energy;
        observed_[consumer][slot] = true;
    }
    void set(std::size_t consumer, std::size_t slot, Energy energy) {
        cells_.at(consumer).at(slot) = std::move(energy);
        observed_[consumer][slot] = true;
    }

    Energy row_total(std::size_t consumer) const {
        Energy sum;
        for (const auto& e : cells_.at(consumer)) sum += e;
        return sum;
    }

    Energy total() const {
        Energy sum;
        for (std::size_t c = 0; c < consumers_.size(); ++c) sum += row_total(c);
        return sum;
    }

    SlotUsageVector column(std::size_t slot) const {
        SlotUsageVector out;
        out.reserve(consumers_.size());
        for (std::size_t c = 0; c < consumers_.size(); ++c) out.push_back({consumers_[c], cells_[c].at(slot)});
        return out;
    }

    /// Cells no reading contributed to; they are billed as zero consumption.
    std::vector<std::pair<std::size_t, std::size_t>> missing_cells() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t c = 0; c < consumers_.size(); ++c) {
            for (std::size_t t = 0; t < slots_; ++t) {
                if (!observed_[c][t]) out.emplace_back(c, t);
            }
        }
        return out;
    }

    friend bool operator==(const SlotUsageMatrix&, const SlotUsageMatrix&) = default;

private:
    std::vector<ConsumerId> consumers_;
    std::size_t slots_ = 0;
    std::vector<std::vector<Energy>> cells_;
    std::vector<std::vector<bool>> observed_;
};

/// Assigns readings to slots. A reading that straddles slot boundaries is
/// split in proportion to its time overlap with each slot. `roster` adds
/// consumers that may have no readings at all.
inline SlotUsageMatrix slot_partition(const std::vector<MeterReading>& readings, const SlotGrid& grid,
                                      const std::vector<ConsumerId>& roster = {}) {
    std::vector<ConsumerId> ids = roster;
    for (const auto& r : readings) {
        if (std::find(ids.begin(), ids.end(), r.consumer) == ids.end()) ids.push_back(r.consumer);
    }
    SlotUsageMatrix matrix(ids, grid.slot_count());

    // Overlap detection per consumer on [start, end) intervals.
    std::map<std::string, std::vector<std::pair<long long, long long>>> intervals;

    const Rational slot_len = grid.slot_seconds();
    const Rational period_len = grid.period_seconds();
    for (std::size_t i = 0; i < readings.size(); ++i) {
        const auto& r = readings[i];
        const std::string where = "reading " + std::to_string(i + 1) + " (" + r.consumer.str() + ")";
        if (r.duration.count() <= 0) throw DomainError(where + ": reading interval must be positive");
        const long long offset = (r.start - grid.period_start()).count();
        const long long end = offset + r.duration.count();
        if (offset < 0 || Rational(end) > period_len) throw DomainError(where + ": outside the billing period");
        intervals[r.consumer.str()].emplace_back(offset, end);

        const std::size_t c = matrix.index_of(r.consumer);
        const Rational duration(r.duration.count());
        auto slot = static_cast<std::size_t>(floor_integer(Rational(offset) / slot_len));
        Rational cursor(offset);
        while (cursor < Rational(end)) {
            const Rational slot_end = Rational(static_cast<long long>(slot + 1)) * slot_len;
            const Rational piece_end = slot_end < Rational(end) ? slot_end : Rational(end);
            matrix.add(c, slot, Energy(r.energy.kwh() * (piece_end - cursor) / duration));
            cursor = piece_end;
            ++slot;
        }
    }

    for (auto& [consumer, spans] : intervals) {
        std::sort(spans.begin(), spans.end());
        for (std::size_t k = 1; k < spans.size(); ++k) {
            if (spans[k].first < spans[k - 1].second) {
                throw DomainError("overlapping readings for consumer '" + consumer + "'");
            }
        }
    }
    return matrix;
}

enum class SchemeKind { monthly_individual, slotted_individual, slotted_group };

inline const std::vector<SchemeKind>& all_schemes() {
    static const std::vector<SchemeKind> kinds{SchemeKind::monthly_individual, SchemeKind::slotted_individual,
                                               SchemeKind::slotted_group};
    return kinds;
}

inline std::string to_string(SchemeKind kind) {
    switch (kind) {
        case SchemeKind::monthly_individual: return "monthly-individual";
        case SchemeKind::slotted_individual: return "slotted-individual";
        case SchemeKind::slotted_group: return "slotted-group";
    }
    return "?";
}

inline std::optional<SchemeKind> parse_scheme(std::string_view text) {
    for (auto kind : all_schemes()) {
        if (to_string(kind) == text) return kind;
    }
    return std::nullopt;
}

struct DemandMetrics {
    std::vector<Energy> slot_load;  // aggregate load per slot
    Energy peak;
    Rational mean{0};
    std::optional<Rational> peak_to_average;  // nullopt when the period has no load
};

/// Column sums, peak, mean and peak-to-average ratio of the aggregate load.
inline DemandMetrics demand_metrics(const SlotUsageMatrix& matrix) {
    if (matrix.slot_count() == 0) throw DomainError("demand metrics need at least one slot");
    DemandMetrics m;
    m.slot_load.resize(matrix.slot_count());
    for (std::size_t c = 0; c < matrix.consumer_count(); ++c) {
        for (std::size_t t = 0; t < matrix.slot_count(); ++t) m.slot_load[t] += matrix.at(c, t);
    }
    Rational sum = 0;
    for (const auto& load : m.slot_load) {
        sum += load.kwh();
        if (load > m.peak) m.peak = load;
    }
    m.mean = sum / Rational(static_cast<long long>(matrix.slot_count()));
    if (m.mean > 0) m.peak_to_average = m.peak.kwh() / m.mean;
    return m;
}

struct SlotCharge {
    Money exact;          // unrounded charge (raw share under grouping)
    DisplayMoney billed;  // amount on the bill
};

struct BillingReport {
    SchemeKind scheme;
    std::string currency;
    AllocationPolicy policy = AllocationPolicy::exact_sum;
    std::vector<ConsumerId> consumers;
    std::vector<Energy> consumer_energy;  // period totals
    std::size_t slot_count = 0;
    /// charges[c][t]; empty rows under the monthly scheme, which has no slots.
    std::vector<std::vector<SlotCharge>> charges;
    std::vector<Money> consumer_totals;         // exact
    std::vector<DisplayMoney> consumer_billed;  // as billed
    /// Per-slot pooled price under the group scheme, per-slot sum otherwise.
    std::vector<Money> slot_totals;
    Money group_total;
    DisplayMoney group_billed;
    std::vector<std::pair<std::size_t, std::size_t>> missing_cells;
    DemandMetrics demand;
};

namespace detail {

inline void require_matching_period(const TariffSchedule& schedule, const SlotGrid& grid) {
    if (schedule.scale() != 1) throw DomainError("schedule passed to billing must be unscaled");
    if (schedule.base_period_days() != Rational(grid.period_days())) {
        throw DomainError("schedule quoted for " + to_display(schedule.base_period_days()) +
                          " days but the billing period has " + std::to_string(grid.period_days()));
    }
}

}  // namespace detail

inline BillingReport run_scheme(const SlotUsageMatrix& matrix, const TariffSchedule& schedule, const SlotGrid& grid,
                                SchemeKind scheme, AllocationPolicy policy = AllocationPolicy::exact_sum) {
    detail::require_matching_period(schedule, grid);
    if (matrix.slot_count() != grid.slot_count()) {
        throw DomainError("matrix has " + std::to_string(matrix.slot_count()) + " slots, grid has " +
                          std::to_string(grid.slot_count()));
    }

    const std::size_t consumers = matrix.consumer_count();
    const std::size_t slots = matrix.slot_count();
    const std::string& currency = schedule.currency();

    BillingReport report;
    report.scheme = scheme;
    report.currency = currency;
    report.policy = policy;
    report.consumers = matrix.consumers();
    report.slot_count = slots;
    for (std::size_t c = 0; c < consumers; ++c) report.consumer_energy.push_back(matrix.row_total(c));
    report.charges.assign(consumers, {});
    report.consumer_totals.assign(consumers, Money(0, currency));
    report.consumer_billed.assign(consumers, DisplayMoney{});
    report.slot_totals.assign(scheme == SchemeKind::monthly_individual ? 0 : slots, Money(0, currency));
    report.missing_cells = matrix.missing_cells();
    report.demand = demand_metrics(matrix);

    switch (scheme) {
        case SchemeKind::monthly_individual:
            for (std::size_t c = 0; c < consumers; ++c) {
                report.consumer_totals[c] = progressive_price(schedule, matrix.row_total(c));
                report.consumer_billed[c] = round_money(report.consumer_totals[c]);
            }
            break;

        case SchemeKind::slotted_individual: {
            const auto slot_schedule = scale_schedule(schedule, grid.factor());
            for (std::size_t c = 0; c < consumers; ++c) {
                auto& row = report.charges[c];
                row.reserve(slots);
                for (std::size_t t = 0; t < slots; ++t) {
                    Money price = progressive_price(slot_schedule, matrix.at(c, t));
                    const DisplayMoney billed = round_money(price);
                    report.consumer_totals[c] += price;
                    report.consumer_billed[c] = report.consumer_billed[c] + billed;
                    report.slot_totals[t] += price;
                    row.push_back({std::move(price), billed});
                }
            }
            break;
        }

        case SchemeKind::slotted_group: {
            const auto slot_schedule = scale_schedule(schedule, grid.factor());
            for (auto& row : report.charges) row.resize(slots);
            for (std::size_t t = 0; t < slots && consumers > 0; ++t) {
                const auto column = matrix.column(t);
                const Money group = group_slot_price(slot_schedule, column);
                const auto allocation =
                    proportional_allocation(group, individual_slot_prices(slot_schedule, column), policy);
                report.slot_totals[t] = group;
                for (std::size_t c = 0; c < consumers; ++c) {
                    const auto& share = allocation.shares[c];
                    report.charges[c][t] = {Money(share.raw_share, currency), share.amount};
                    report.consumer_totals[c] += report.charges[c][t].exact;
                    report.consumer_billed[c] = report.consumer_billed[c] + share.amount;
                }
            }
            break;
        }
    }

    report.group_total = Money(0, currency);
    for (const auto& total : report.consumer_totals) report.group_total += total;
    for (const auto& billed : report.consumer_billed) report.group_billed = report.group_billed + billed;
    return report;
}

/// A report failed an internal consistency check. Signals a bug, not bad input.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Re-derives the report's totals from its cells and throws InvariantError
/// on any mismatch.
inline void check_report_invariants(const BillingReport& report) {
    Money grand(0, report.currency);
    for (std::size_t c = 0; c < report.consumers.size(); ++c) {
        if (report.scheme != SchemeKind::monthly_individual) {
            Money sum(0, report.currency);
            DisplayMoney billed;
            for (const auto& cell : report.charges[c]) {
                sum += cell.exact;
                billed = billed + cell.billed;
            }
            if (!(sum == report.consumer_totals[c]) || !(billed == report.consumer_billed[c])) {
                throw InvariantError("slot charges of '" + report.consumers[c].str() + "' do not add up to the total");
            }
        }
        if (report.consumer_totals[c].value() < 0) throw InvariantError("negative charge");
        grand += report.consumer_totals[c];
    }
    if (!(grand == report.group_total)) throw InvariantError("consumer totals do not add up to the group total");
    if (report.scheme != SchemeKind::monthly_individual) {
        Money slot_sum(0, report.currency);
        for (const auto& m : report.slot_totals) slot_sum += m;
        if (!(slot_sum == report.group_total)) throw InvariantError("slot totals do not add up to the group total");
    }
    if (report.scheme == SchemeKind::slotted_group && report.policy == AllocationPolicy::exact_sum) {
        DisplayMoney expected;
        for (const auto& m : report.slot_totals) expected = expected + round_money(m);
        if (!(expected == report.group_billed)) throw InvariantError("exact-sum allocation drifted from the slot prices");
    }
}

struct ConsumerComparison {
    ConsumerId consumer;
    Money monthly;
    Money slotted;
    Money grouped;
    DisplayMoney monthly_billed;
    DisplayMoney slotted_billed;
    DisplayMoney grouped_billed;

    Money slotting_penalty() const { return slotted - monthly; }
    Money grouping_saving() const { return slotted - grouped; }
};

struct SchemeComparison {
    std::vector<BillingReport> reports;  // in all_schemes() order
    std::vector<ConsumerComparison> consumers;
    Money monthly_total;
    Money slotted_total;
    Money grouped_total;

    Money slotting_penalty() const { return slotted_total - monthly_total; }
    Money grouping_saving() const { return slotted_total - grouped_total; }

    // Differences between billed totals (sums of rounded line items); these
    // can differ from the rounded exact deltas by a few minor units.
    DisplayMoney billed_slotting_penalty() const {
        return report(SchemeKind::slotted_individual).group_billed - report(SchemeKind::monthly_individual).group_billed;
    }
    DisplayMoney billed_grouping_saving() const {
        return report(SchemeKind::slotted_individual).group_billed - report(SchemeKind::slotted_group).group_billed;
    }
    const BillingReport& report(SchemeKind kind) const { return reports.at(static_cast<std::size_t>(kind)); }
};

inline SchemeComparison compare_schemes(const SlotUsageMatrix& matrix, const TariffSchedule& schedule,
                                        const SlotGrid& grid, AllocationPolicy policy = AllocationPolicy::exact_sum) {
    SchemeComparison cmp;
    for (auto kind : all_schemes()) cmp.reports.push_back(run_scheme(matrix, schedule, grid, kind, policy));
    const auto& monthly = cmp.report(SchemeKind::monthly_individual);
    const auto& slotted = cmp.report(SchemeKind::slotted_individual);
    const auto& grouped = cmp.report(SchemeKind::slotted_group);
    for (std::size_t c = 0; c < matrix.consumer_count(); ++c) {
        cmp.consumers.push_back({matrix.consumers()[c], monthly.consumer_totals[c], slotted.consumer_totals[c],
                                 grouped.consumer_totals[c], monthly.consumer_billed[c], slotted.consumer_billed[c],
                                 grouped.consumer_billed[c]});
    }
    cmp.monthly_total = monthly.group_total;
    cmp.slotted_total = slotted.group_total;
    cmp.grouped_total = grouped.group_total;
    return cmp;
}

struct ShiftReport {
    SchemeKind scheme;
    ConsumerId consumer;
    Money cost_before;
    Money cost_after;
    DisplayMoney billed_before;
    DisplayMoney billed_after;
    Money group_before;
    Money group_after;
    std::optional<Rational> par_before;
    std::optional<Rational> par_after;
    Energy period_total_before;
    Energy period_total_after;

    Money cost_delta() const { return cost_after - cost_before; }
    Money group_delta() const { return group_after - group_before; }
    std::optional<Rational> par_delta() const {
        if (!par_before || !par_after) return std::nullopt;
        return *par_after - *par_before;
    }
};

/// Moves `amount` of one consumer's energy between two slots and reports how
/// that consumer's cost, the group total and the PAR change. The input
/// matrix is left untouched.
inline ShiftReport what_if_shift(const SlotUsageMatrix& matrix, const TariffSchedule& schedule, const SlotGrid& grid,
                                 const ConsumerId& consumer, std::size_t from_slot, std::size_t to_slot,
                                 const Energy& amount, SchemeKind scheme,
                                 AllocationPolicy policy = AllocationPolicy::exact_sum) {
    const std::size_t c = matrix.index_of(consumer);
    if (from_slot >= matrix.slot_count() || to_slot >= matrix.slot_count()) {
        throw DomainError("slot index out of range (matrix has " + std::to_string(matrix.slot_count()) + " slots)");
    }
    if (amount > matrix.at(c, from_slot)) {
        throw DomainError("consumer '" + consumer.str() + "' has only " + matrix.at(c, from_slot).display() +
                          " kWh in slot " + std::to_string(from_slot));
    }

    SlotUsageMatrix shifted = matrix;
    shifted.set(c, from_slot, matrix.at(c, from_slot) - amount);
    shifted.set(c, to_slot, shifted.at(c, to_slot) + amount);

    const auto before = run_scheme(matrix, schedule, grid, scheme, policy);
    const auto after = run_scheme(shifted, schedule, grid, scheme, policy);

    ShiftReport r;
    r.scheme = scheme;
    r.consumer = consumer;
    r.cost_before = before.consumer_totals[c];
    r.cost_after = after.consumer_totals[c];
    r.billed_before = before.consumer_billed[c];
    r.billed_after = after.consumer_billed[c];
    r.group_before = before.group_total;
    r.group_after = after.group_total;
    r.par_before = before.demand.peak_to_average;
    r.par_after = after.demand.peak_to_average;
    r.period_total_before = matrix.row_total(c);
    r.period_total_after = shifted.row_total(c);
    return r;
}

}  // namespace tariffsim
