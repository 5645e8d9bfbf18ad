#pragma once

// Command-line front end. run_cli() is kept separate from main() so tests can
// drive it with captured streams.

#include "tariffsim/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace tariffsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInternalError = 2;

namespace cli_detail {

struct TraceOptions {
    std::string schedule_path;
    std::string trace_path;
    std::string slot_hours = "6";
    long period_days = 30;
    std::string period_start;
    long reading_minutes = 60;
    std::string policy = "exact-sum";
    std::vector<std::string> roster;
    std::string format = "table";
    std::size_t precision = 6;
    bool exact = false;
};

inline void add_trace_options(CLI::App& cmd, TraceOptions& o) {
    cmd.add_option("--schedule", o.schedule_path, "Tariff schedule JSON")->required();
    cmd.add_option("--trace", o.trace_path, "Meter trace CSV")->required();
    cmd.add_option("--slot-hours", o.slot_hours, "Slot length in hours; must divide 24")->capture_default_str();
    cmd.add_option("--period-days", o.period_days, "Days in the billing period")->capture_default_str();
    cmd.add_option("--period-start", o.period_start,
                   "RFC 3339 start of the billing period (default: midnight UTC of the first reading)");
    cmd.add_option("--reading-minutes", o.reading_minutes, "Length of each meter reading interval")
        ->capture_default_str();
    cmd.add_option("--policy", o.policy, "Group allocation policy")
        ->check(CLI::IsMember({"exact-sum", "independent"}))
        ->capture_default_str();
    cmd.add_option("--consumers", o.roster, "Roster ids to include even without readings")->delimiter(',');
    cmd.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"table", "json"}))->capture_default_str();
    cmd.add_option("--precision", o.precision, "Decimals for non-terminating values in JSON")->capture_default_str();
    cmd.add_flag("--exact", o.exact, "Add exact p/q fields for non-terminating values in JSON");
}

inline AllocationPolicy parse_policy(const std::string& text) {
    return text == "independent" ? AllocationPolicy::independent_rounding : AllocationPolicy::exact_sum;
}

struct LoadedTrace {
    TariffSchedule schedule;
    SlotGrid grid;
    SlotUsageMatrix matrix;
};

inline LoadedTrace load_trace(const TraceOptions& o) {
    auto schedule = parse_schedule_file(o.schedule_path);
    if (o.reading_minutes <= 0) throw DomainError("--reading-minutes must be positive");
    const auto readings = parse_trace_file(o.trace_path, std::chrono::minutes{o.reading_minutes});

    Timestamp start{};
    if (!o.period_start.empty()) {
        start = parse_timestamp(o.period_start);
    } else if (!readings.empty()) {
        const auto first = std::min_element(readings.begin(), readings.end(),
                                            [](const auto& a, const auto& b) { return a.start < b.start; });
        start = std::chrono::floor<std::chrono::days>(first->start);
    }

    Rational slot_hours;
    try {
        slot_hours = parse_rational(o.slot_hours);
    } catch (const NumberFormatError& e) {
        throw DomainError(std::string("--slot-hours: ") + e.what());
    }
    SlotGrid grid(slot_hours, o.period_days, start);

    std::vector<ConsumerId> roster;
    for (const auto& id : o.roster) roster.emplace_back(id);
    auto matrix = slot_partition(readings, grid, roster);
    return {std::move(schedule), std::move(grid), std::move(matrix)};
}

inline EmitOptions emit_options(const TraceOptions& o) { return {o.precision, o.exact}; }

inline std::string schedule_summary(const TariffSchedule& s) {
    std::ostringstream out;
    out << "valid schedule: " << s.tiers().size() << " tiers, currency " << s.currency() << ", base period "
        << to_display(s.base_period_days()) << " days, " << (s.is_convex() ? "progressive" : "regressive (override)")
        << "\n\n";
    TextTable table({"tier", "from kWh", "to kWh", "rate"});
    Rational lower = 0;
    for (std::size_t i = 0; i < s.tiers().size(); ++i) {
        const auto& tier = s.tiers()[i];
        table.add({std::to_string(i + 1), to_display(lower, 4),
                   tier.upper_bound ? to_display(tier.upper_bound->kwh(), 4) : std::string("-"),
                   to_display(tier.rate.per_kwh(), 6)});
        if (tier.upper_bound) lower = tier.upper_bound->kwh();
    }
    out << table.str();
    return out.str();
}

}  // namespace cli_detail

/// Runs one CLI invocation. Exit status: 0 success, 1 input error,
/// 2 internal invariant failure.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;

    CLI::App app{"Progressive-tariff billing engine for slotted and grouped pricing", "tariffsim"};
    app.require_subcommand(1);

    std::string schedule_path;
    std::string format = "table";

    auto* validate = app.add_subcommand("validate", "Check a schedule file and print a summary");
    validate->add_option("--schedule", schedule_path, "Tariff schedule JSON")->required();
    validate->add_option("--format", format, "Output format")->check(CLI::IsMember({"table", "json"}));

    std::string usage_text;
    std::string factor_text = "1";
    auto* bill = app.add_subcommand("bill", "Price one usage figure and show the tier breakdown");
    bill->add_option("--schedule", schedule_path, "Tariff schedule JSON")->required();
    bill->add_option("--usage", usage_text, "Usage in kWh (decimal or p/q)")->required();
    bill->add_option("--factor", factor_text, "Scale tier ranges by this factor first (e.g. 1/120)")
        ->capture_default_str();
    bill->add_option("--format", format, "Output format")->check(CLI::IsMember({"table", "json"}));

    TraceOptions trace_opts;
    std::string scheme_text = "slotted-group";
    auto* simulate = app.add_subcommand("simulate", "Bill a trace under one pricing scheme");
    add_trace_options(*simulate, trace_opts);
    simulate->add_option("--scheme", scheme_text, "Pricing scheme")
        ->check(CLI::IsMember({"monthly-individual", "slotted-individual", "slotted-group"}))
        ->capture_default_str();

    std::vector<std::string> compare_schemes_text;
    auto* compare = app.add_subcommand("compare", "Bill a trace under all schemes side by side");
    add_trace_options(*compare, trace_opts);
    compare
        ->add_option("--scheme", compare_schemes_text, "Schemes whose full reports are included (default: all)")
        ->delimiter(',')
        ->check(CLI::IsMember({"monthly-individual", "slotted-individual", "slotted-group"}));

    std::string group_text;
    std::vector<std::string> individual_text;
    std::vector<std::string> ids_text;
    std::string policy_text = "exact-sum";
    auto* allocate = app.add_subcommand("allocate", "Split a group price in proportion to individual prices");
    allocate->add_option("--group", group_text, "Group price")->required();
    allocate->add_option("--individual", individual_text, "Individual prices, comma separated")
        ->required()
        ->delimiter(',');
    allocate->add_option("--ids", ids_text, "Consumer ids (default c1, c2, ...)")->delimiter(',');
    allocate->add_option("--policy", policy_text, "Allocation policy")
        ->check(CLI::IsMember({"exact-sum", "independent"}))
        ->capture_default_str();
    allocate->add_option("--format", format, "Output format")->check(CLI::IsMember({"table", "json"}));

    std::string consumer_text;
    std::size_t from_slot = 0;
    std::size_t to_slot = 0;
    std::string amount_text;
    auto* shift = app.add_subcommand("shift", "Evaluate moving one consumer's energy between slots");
    add_trace_options(*shift, trace_opts);
    shift->add_option("--consumer", consumer_text, "Consumer id")->required();
    shift->add_option("--from", from_slot, "Source slot index")->required();
    shift->add_option("--to", to_slot, "Destination slot index")->required();
    shift->add_option("--amount", amount_text, "kWh to move")->required();
    shift->add_option("--scheme", scheme_text, "Pricing scheme")
        ->check(CLI::IsMember({"monthly-individual", "slotted-individual", "slotted-group"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (*validate) {
            const auto schedule = parse_schedule_file(schedule_path);
            if (format == "json") {
                out << emit_schedule_json(schedule);
            } else {
                out << schedule_summary(schedule);
            }
        } else if (*bill) {
            auto schedule = parse_schedule_file(schedule_path);
            const ScaleFactor factor(parse_rational(factor_text));
            if (factor.value() != 1) schedule = scale_schedule(schedule, factor);
            const Energy usage = Energy::from_text(usage_text);
            const Money price = progressive_price(schedule, usage);
            const auto breakdown = tier_breakdown(schedule, usage);
            Money check(0, schedule.currency());
            for (const auto& row : breakdown) check += row.charge;
            if (!(check == price)) throw InvariantError("tier breakdown does not add up to the price");

            if (format == "json") {
                nlohmann::ordered_json j;
                j["currency"] = schedule.currency();
                j["usage_kwh"] = to_display(usage.kwh());
                j["price"] = to_display(price.value());
                j["price_billed"] = round_money(price).str();
                nlohmann::ordered_json rows = nlohmann::ordered_json::array();
                for (const auto& row : breakdown) {
                    rows.push_back({{"tier", row.tier},
                                    {"energy_kwh", to_display(row.energy.kwh())},
                                    {"charge", to_display(row.charge.value())}});
                }
                j["breakdown"] = std::move(rows);
                out << j.dump(2) << '\n';
            } else {
                out << "price: " << round_money(price) << ' ' << schedule.currency() << "\n\n";
                TextTable table({"tier", "kWh", "charge"});
                for (const auto& row : breakdown) {
                    table.add({std::to_string(row.tier), row.energy.display(), row.charge.str()});
                }
                out << table.str();
            }
        } else if (*simulate) {
            const auto loaded = load_trace(trace_opts);
            const auto report = run_scheme(loaded.matrix, loaded.schedule, loaded.grid, *parse_scheme(scheme_text),
                                           parse_policy(trace_opts.policy));
            check_report_invariants(report);
            if (trace_opts.format == "json") {
                out << report_json(report, emit_options(trace_opts)).dump(2) << '\n';
            } else {
                out << report_table(report);
            }
        } else if (*compare) {
            const auto loaded = load_trace(trace_opts);
            auto cmp = compare_schemes(loaded.matrix, loaded.schedule, loaded.grid, parse_policy(trace_opts.policy));
            for (const auto& r : cmp.reports) check_report_invariants(r);
            if (trace_opts.format == "json") {
                auto j = comparison_json(cmp, emit_options(trace_opts));
                if (!compare_schemes_text.empty()) {
                    nlohmann::ordered_json kept = nlohmann::ordered_json::array();
                    for (const auto& r : j["reports"]) {
                        const auto name = r["scheme"].get<std::string>();
                        if (std::find(compare_schemes_text.begin(), compare_schemes_text.end(), name) !=
                            compare_schemes_text.end()) {
                            kept.push_back(r);
                        }
                    }
                    j["reports"] = std::move(kept);
                }
                out << j.dump(2) << '\n';
            } else {
                out << comparison_table(cmp);
            }
        } else if (*allocate) {
            const Money group(parse_rational(group_text));
            if (!ids_text.empty() && ids_text.size() != individual_text.size()) {
                throw DomainError("--ids has " + std::to_string(ids_text.size()) + " entries but --individual has " +
                                  std::to_string(individual_text.size()));
            }
            std::vector<ConsumerCharge> individual;
            for (std::size_t i = 0; i < individual_text.size(); ++i) {
                const std::string id = ids_text.empty() ? "c" + std::to_string(i + 1) : ids_text[i];
                individual.push_back({ConsumerId(id), Money(parse_rational(individual_text[i]))});
            }
            const auto result = proportional_allocation(group, individual, parse_policy(policy_text));
            if (result.policy == AllocationPolicy::exact_sum && !(result.total() == round_money(group))) {
                throw InvariantError("exact-sum allocation does not add up to the group price");
            }
            if (format == "json") {
                out << allocation_json(result).dump(2) << '\n';
            } else {
                std::string line;
                for (const auto& s : result.shares) line += (line.empty() ? "" : ",") + s.amount.str();
                out << line << "\n\n";
                TextTable table({"consumer", "raw share", "amount"});
                for (const auto& s : result.shares) table.add({s.consumer.str(), to_fixed(s.raw_share, 6), s.amount.str()});
                table.add({"TOTAL", to_fixed(group.value(), 6), result.total().str()});
                out << table.str();
                out << "policy: " << to_string(result.policy) << ", adjustments: " << result.adjustments.size() << '\n';
            }
        } else if (*shift) {
            const auto loaded = load_trace(trace_opts);
            const auto report =
                what_if_shift(loaded.matrix, loaded.schedule, loaded.grid, ConsumerId(consumer_text), from_slot,
                              to_slot, Energy::from_text(amount_text), *parse_scheme(scheme_text),
                              parse_policy(trace_opts.policy));
            if (!(report.period_total_before == report.period_total_after)) {
                throw InvariantError("shift changed the consumer's period total");
            }
            if (trace_opts.format == "json") {
                out << shift_json(report, emit_options(trace_opts)).dump(2) << '\n';
            } else {
                TextTable table({"", "before", "after", "delta"});
                table.add({"consumer cost", report.cost_before.str(), report.cost_after.str(), report.cost_delta().str()});
                table.add({"group total", report.group_before.str(), report.group_after.str(),
                           report.group_delta().str()});
                table.add({"PAR", detail::par_text(report.par_before), detail::par_text(report.par_after),
                           detail::par_text(report.par_delta())});
                out << "scheme: " << to_string(report.scheme) << ", consumer: " << report.consumer.str() << "\n\n"
                    << table.str();
            }
        }
    } catch (const std::logic_error& e) {
        // std::invalid_argument derives from logic_error but means bad input.
        if (dynamic_cast<const std::invalid_argument*>(&e) != nullptr) {
            err << "error: " << e.what() << '\n';
            return kExitInputError;
        }
        err << "internal error: " << e.what() << '\n';
        return kExitInternalError;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternalError;
    }
    return kExitOk;
}

}  // namespace tariffsim
