#pragma once

// File formats: tariff schedule JSON, meter trace CSV, and report emission
// (plain-text tables and JSON with exact decimal strings).

#include "tariffsim/billing.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace tariffsim {

/// Malformed input file or field; the message carries the location.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Timestamps
// ---------------------------------------------------------------------------

/// Parses an RFC 3339 timestamp ("2024-01-01T06:00:00Z", offsets allowed).
/// Fractional seconds must be zero.
inline Timestamp parse_timestamp(std::string_view text) {
    auto fail = [&]() -> ParseError { return ParseError("malformed timestamp '" + std::string(text) + "'"); };
    auto digits = [&](std::size_t pos, std::size_t n) {
        if (pos + n > text.size()) throw fail();
        int v = 0;
        for (std::size_t i = pos; i < pos + n; ++i) {
            if (text[i] < '0' || text[i] > '9') throw fail();
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    if (text.size() < 20) throw fail();
    const int year = digits(0, 4);
    if (text[4] != '-' || text[7] != '-') throw fail();
    const int month = digits(5, 2);
    const int day = digits(8, 2);
    if (text[10] != 'T' && text[10] != 't' && text[10] != ' ') throw fail();
    const int hour = digits(11, 2);
    if (text[13] != ':' || text[16] != ':') throw fail();
    const int minute = digits(14, 2);
    const int second = digits(17, 2);
    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        const std::size_t begin = pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            if (text[pos] != '0') throw ParseError("sub-second timestamp '" + std::string(text) + "' not supported");
            ++pos;
        }
        if (pos == begin) throw fail();
    }
    int offset_minutes = 0;
    if (pos < text.size() && (text[pos] == 'Z' || text[pos] == 'z')) {
        ++pos;
    } else if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        const int sign = text[pos] == '-' ? -1 : 1;
        const int oh = digits(pos + 1, 2);
        if (pos + 3 >= text.size() || text[pos + 3] != ':') throw fail();
        const int om = digits(pos + 4, 2);
        if (oh > 23 || om > 59) throw fail();
        offset_minutes = sign * (oh * 60 + om);
        pos += 6;
    } else {
        throw fail();
    }
    if (pos != text.size()) throw fail();

    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                          std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok() || hour > 23 || minute > 59 || second > 59) throw fail();
    return std::chrono::sys_days{ymd} + std::chrono::hours{hour} + std::chrono::minutes{minute - offset_minutes} +
           std::chrono::seconds{second};
}

inline std::string format_timestamp(Timestamp ts) {
    const auto days = std::chrono::floor<std::chrono::days>(ts);
    const std::chrono::year_month_day ymd{days};
    const std::chrono::hh_mm_ss hms{ts - days};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

// ---------------------------------------------------------------------------
// Tariff schedule JSON
// ---------------------------------------------------------------------------

namespace detail {

constexpr const char* kDecimalKey = "$decimal";

/// DOM builder that keeps the source text of non-integer numbers, so that
/// 60.7 is read as 607/10 instead of the nearest double.
class ExactNumberDomParser : public nlohmann::detail::json_sax_dom_parser<nlohmann::json> {
public:
    using Base = nlohmann::detail::json_sax_dom_parser<nlohmann::json>;
    using Base::Base;

    bool number_float(number_float_t /*val*/, const string_t& text) {
        string_t key = kDecimalKey;
        string_t copy = text;
        return Base::start_object(1) && Base::key(key) && Base::string(copy) && Base::end_object();
    }
};

inline nlohmann::json parse_json_exact(std::string_view text, const std::string& source) {
    nlohmann::json root;
    ExactNumberDomParser sax(root);
    try {
        nlohmann::json::sax_parse(text, &sax);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(source + ": " + e.what());
    }
    return root;
}

inline bool is_decimal_node(const nlohmann::json& node) {
    return node.is_object() && node.size() == 1 && node.contains(kDecimalKey);
}

/// Numeric field from a JSON number or a decimal / "p/q" string.
inline Rational rational_field(const nlohmann::json& node, const std::string& field) {
    try {
        if (node.is_number_integer()) return Rational(Integer(node.dump()));
        if (is_decimal_node(node)) return parse_decimal(node.at(kDecimalKey).get<std::string>());
        if (node.is_string()) return parse_rational(node.get<std::string>());
    } catch (const NumberFormatError& e) {
        throw ParseError(field + ": " + e.what());
    }
    throw ParseError(field + ": expected a number or decimal string");
}

}  // namespace detail

/// Reads a schedule from JSON text:
///   {"currency": "KRW", "base_period_days": 30,
///    "tiers": [{"upper_kwh": 100, "rate": "60.7"}, ..., {"upper_kwh": null, "rate": "709.5"}]}
/// An optional boolean "allow_regressive" admits decreasing rates.
inline ScheduleDescription parse_schedule_json(std::string_view text, const std::string& source = "schedule") {
    const auto root = detail::parse_json_exact(text, source);
    if (!root.is_object()) throw ParseError(source + ": top level must be an object");

    ScheduleDescription raw;
    if (root.contains("currency")) {
        if (!root["currency"].is_string()) throw ParseError(source + ": currency: expected a string");
        raw.currency = root["currency"].get<std::string>();
    }
    if (root.contains("base_period_days")) {
        raw.base_period_days = detail::rational_field(root["base_period_days"], source + ": base_period_days");
    }
    if (root.contains("allow_regressive")) {
        if (!root["allow_regressive"].is_boolean()) throw ParseError(source + ": allow_regressive: expected a boolean");
        raw.allow_regressive = root["allow_regressive"].get<bool>();
    }
    if (!root.contains("tiers") || !root["tiers"].is_array()) throw ParseError(source + ": tiers: expected an array");

    const auto& tiers = root["tiers"];
    for (std::size_t i = 0; i < tiers.size(); ++i) {
        const std::string where = source + ": tiers[" + std::to_string(i) + "]";
        const auto& node = tiers[i];
        if (!node.is_object()) throw ParseError(where + ": expected an object");
        if (!node.contains("upper_kwh")) throw ParseError(where + ".upper_kwh: missing");
        if (!node.contains("rate")) throw ParseError(where + ".rate: missing");
        ScheduleDescription::Tier tier;
        if (!node["upper_kwh"].is_null()) tier.upper_kwh = detail::rational_field(node["upper_kwh"], where + ".upper_kwh");
        tier.rate = detail::rational_field(node["rate"], where + ".rate");
        raw.tiers.push_back(std::move(tier));
    }
    return raw;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Reads and validates a schedule file. Validation messages are passed
/// through unchanged, prefixed with the path.
inline TariffSchedule parse_schedule_file(const std::string& path) {
    const auto raw = parse_schedule_json(read_file(path), path);
    try {
        return validate_schedule(raw);
    } catch (const ScheduleError& e) {
        throw ScheduleError(path + ": " + e.what());
    }
}

namespace detail {

/// JSON number literal when the value has a finite decimal form, else a
/// quoted exact fraction.
inline std::string json_rational_literal(const Rational& r) {
    return is_terminating_decimal(r) ? to_exact_decimal(r) : "\"" + to_fraction(r) + "\"";
}

}  // namespace detail

/// Writes a schedule in the same format parse_schedule_json reads. Bounds
/// are numbers (or "p/q" strings once scaling made them non-decimal), rates
/// are decimal strings.
inline std::string emit_schedule_json(const TariffSchedule& schedule) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"currency\": " << nlohmann::json(schedule.currency()).dump() << ",\n";
    out << "  \"base_period_days\": " << detail::json_rational_literal(schedule.base_period_days()) << ",\n";
    if (schedule.regressive_allowed()) out << "  \"allow_regressive\": true,\n";
    out << "  \"tiers\": [\n";
    for (std::size_t i = 0; i < schedule.tiers().size(); ++i) {
        const auto& tier = schedule.tiers()[i];
        const Rational& rate = tier.rate.per_kwh();
        out << "    {\"upper_kwh\": "
            << (tier.upper_bound ? detail::json_rational_literal(tier.upper_bound->kwh()) : std::string("null"))
            << ", \"rate\": \"" << (is_terminating_decimal(rate) ? to_exact_decimal(rate) : to_fraction(rate))
            << "\"}" << (i + 1 < schedule.tiers().size() ? "," : "") << "\n";
    }
    out << "  ]\n}\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Trace CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kTraceHeader = "consumer_id,interval_start,energy_kwh";

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

/// Parses trace CSV text. Every reading gets `reading_interval` as its
/// duration. Errors name the 1-based line (the header is line 1).
inline std::vector<MeterReading> parse_trace_csv(std::string_view text, const std::string& source = "trace",
                                                 std::chrono::seconds reading_interval = std::chrono::hours{1}) {
    std::vector<MeterReading> readings;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = detail::trim(line);
        if (!header_seen) {
            if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
            if (line != kTraceHeader) {
                throw ParseError(source + ": line " + std::to_string(line_no) + ": bad header, expected '" +
                                 std::string(kTraceHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;

        const std::string where = source + ": line " + std::to_string(line_no);
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            fields.push_back(detail::trim(line.substr(start, comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 3) {
            throw ParseError(where + ": expected 3 fields, found " + std::to_string(fields.size()));
        }
        if (fields[0].empty()) throw ParseError(where + ": empty consumer_id");

        MeterReading reading;
        reading.consumer = ConsumerId(std::string(fields[0]));
        reading.duration = reading_interval;
        try {
            reading.start = parse_timestamp(fields[1]);
        } catch (const ParseError& e) {
            throw ParseError(where + ": " + e.what());
        }
        Rational kwh;
        try {
            kwh = parse_rational(fields[2]);
        } catch (const NumberFormatError& e) {
            throw ParseError(where + ": energy_kwh: " + e.what());
        }
        if (kwh < 0) throw ParseError(where + ": negative energy " + std::string(fields[2]));
        reading.energy = Energy(std::move(kwh));
        readings.push_back(std::move(reading));
    }
    if (!header_seen) throw ParseError(source + ": empty file, expected header '" + std::string(kTraceHeader) + "'");
    return readings;
}

inline std::vector<MeterReading> parse_trace_file(const std::string& path,
                                                  std::chrono::seconds reading_interval = std::chrono::hours{1}) {
    return parse_trace_csv(read_file(path), path, reading_interval);
}

/// Writes readings back as trace CSV (energies as exact decimals or "p/q").
inline std::string emit_trace_csv(const std::vector<MeterReading>& readings) {
    std::string out(kTraceHeader);
    out += '\n';
    for (const auto& r : readings) {
        const Rational& e = r.energy.kwh();
        out += r.consumer.str() + ',' + format_timestamp(r.start) + ',' +
               (is_terminating_decimal(e) ? to_exact_decimal(e) : to_fraction(e)) + '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct EmitOptions {
    std::size_t precision = 6;  // decimals for values with no finite decimal form
    bool exact_fractions = false;  // add "<field>_exact": "p/q" for those values
};

namespace detail {

inline void put_value(nlohmann::ordered_json& obj, const std::string& key, const Rational& value,
                      const EmitOptions& opts) {
    obj[key] = to_display(value, opts.precision);
    if (opts.exact_fractions && !is_terminating_decimal(value)) obj[key + "_exact"] = to_fraction(value);
}

inline nlohmann::ordered_json demand_json(const DemandMetrics& m, const EmitOptions& opts) {
    nlohmann::ordered_json out;
    nlohmann::ordered_json loads = nlohmann::ordered_json::array();
    for (const auto& l : m.slot_load) loads.push_back(to_display(l.kwh(), opts.precision));
    out["slot_load_kwh"] = std::move(loads);
    put_value(out, "peak_kwh", m.peak.kwh(), opts);
    put_value(out, "mean_kwh", m.mean, opts);
    if (m.peak_to_average) {
        put_value(out, "peak_to_average", *m.peak_to_average, opts);
    } else {
        out["peak_to_average"] = "undefined";
    }
    return out;
}

inline std::string par_text(const std::optional<Rational>& par) {
    return par ? to_fixed(*par, 4) : std::string("undefined");
}

}  // namespace detail

inline nlohmann::ordered_json report_json(const BillingReport& report, const EmitOptions& opts = {}) {
    nlohmann::ordered_json out;
    out["scheme"] = to_string(report.scheme);
    out["currency"] = report.currency;
    if (report.scheme == SchemeKind::slotted_group) out["policy"] = to_string(report.policy);
    out["slot_count"] = report.slot_count;

    nlohmann::ordered_json consumers = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < report.consumers.size(); ++c) {
        nlohmann::ordered_json entry;
        entry["id"] = report.consumers[c].str();
        detail::put_value(entry, "energy_kwh", report.consumer_energy[c].kwh(), opts);
        detail::put_value(entry, "total", report.consumer_totals[c].value(), opts);
        entry["billed"] = report.consumer_billed[c].str();
        nlohmann::ordered_json slots = nlohmann::ordered_json::array();
        for (std::size_t t = 0; t < report.charges[c].size(); ++t) {
            nlohmann::ordered_json s;
            s["slot"] = t;
            detail::put_value(s, "charge", report.charges[c][t].exact.value(), opts);
            s["billed"] = report.charges[c][t].billed.str();
            slots.push_back(std::move(s));
        }
        entry["slots"] = std::move(slots);
        consumers.push_back(std::move(entry));
    }
    out["consumers"] = std::move(consumers);

    nlohmann::ordered_json slot_totals = nlohmann::ordered_json::array();
    for (const auto& m : report.slot_totals) slot_totals.push_back(to_display(m.value(), opts.precision));
    out["slot_totals"] = std::move(slot_totals);
    detail::put_value(out, "group_total", report.group_total.value(), opts);
    out["group_billed"] = report.group_billed.str();

    nlohmann::ordered_json missing = nlohmann::ordered_json::array();
    for (const auto& [c, t] : report.missing_cells) {
        missing.push_back({{"consumer", report.consumers[c].str()}, {"slot", t}});
    }
    out["missing_cells"] = std::move(missing);
    out["demand"] = detail::demand_json(report.demand, opts);
    return out;
}

inline nlohmann::ordered_json comparison_json(const SchemeComparison& cmp, const EmitOptions& opts = {}) {
    nlohmann::ordered_json out;
    nlohmann::ordered_json consumers = nlohmann::ordered_json::array();
    for (const auto& c : cmp.consumers) {
        nlohmann::ordered_json entry;
        entry["id"] = c.consumer.str();
        detail::put_value(entry, "monthly_individual", c.monthly.value(), opts);
        detail::put_value(entry, "slotted_individual", c.slotted.value(), opts);
        detail::put_value(entry, "slotted_group", c.grouped.value(), opts);
        detail::put_value(entry, "slotting_penalty", c.slotting_penalty().value(), opts);
        detail::put_value(entry, "grouping_saving", c.grouping_saving().value(), opts);
        consumers.push_back(std::move(entry));
    }
    out["consumers"] = std::move(consumers);
    nlohmann::ordered_json totals;
    detail::put_value(totals, "monthly_individual", cmp.monthly_total.value(), opts);
    detail::put_value(totals, "slotted_individual", cmp.slotted_total.value(), opts);
    detail::put_value(totals, "slotted_group", cmp.grouped_total.value(), opts);
    detail::put_value(totals, "slotting_penalty", cmp.slotting_penalty().value(), opts);
    detail::put_value(totals, "grouping_saving", cmp.grouping_saving().value(), opts);
    out["totals"] = std::move(totals);
    nlohmann::ordered_json reports = nlohmann::ordered_json::array();
    for (const auto& r : cmp.reports) reports.push_back(report_json(r, opts));
    out["reports"] = std::move(reports);
    return out;
}

inline nlohmann::ordered_json shift_json(const ShiftReport& r, const EmitOptions& opts = {}) {
    nlohmann::ordered_json out;
    out["scheme"] = to_string(r.scheme);
    out["consumer"] = r.consumer.str();
    detail::put_value(out, "cost_before", r.cost_before.value(), opts);
    detail::put_value(out, "cost_after", r.cost_after.value(), opts);
    detail::put_value(out, "cost_delta", r.cost_delta().value(), opts);
    out["billed_before"] = r.billed_before.str();
    out["billed_after"] = r.billed_after.str();
    detail::put_value(out, "group_before", r.group_before.value(), opts);
    detail::put_value(out, "group_after", r.group_after.value(), opts);
    detail::put_value(out, "group_delta", r.group_delta().value(), opts);
    out["par_before"] = r.par_before ? to_display(*r.par_before, opts.precision) : "undefined";
    out["par_after"] = r.par_after ? to_display(*r.par_after, opts.precision) : "undefined";
    out["par_delta"] = r.par_delta() ? to_display(*r.par_delta(), opts.precision) : "undefined";
    return out;
}

inline nlohmann::ordered_json allocation_json(const AllocationResult& a, const EmitOptions& opts = {}) {
    nlohmann::ordered_json out;
    out["policy"] = to_string(a.policy);
    nlohmann::ordered_json shares = nlohmann::ordered_json::array();
    for (const auto& s : a.shares) {
        nlohmann::ordered_json entry;
        entry["id"] = s.consumer.str();
        detail::put_value(entry, "raw_share", s.raw_share, opts);
        entry["amount"] = s.amount.str();
        shares.push_back(std::move(entry));
    }
    out["shares"] = std::move(shares);
    nlohmann::ordered_json adjustments = nlohmann::ordered_json::array();
    for (const auto& adj : a.adjustments) adjustments.push_back({{"id", adj.consumer.str()}, {"minor_units", adj.minor_units}});
    out["adjustments"] = std::move(adjustments);
    out["total"] = a.total().str();
    return out;
}

/// Fixed-width text table; the first column is left-aligned, the rest right.
class TextTable {
public:
    explicit TextTable(std::vector<std::string> header) : rows_{std::move(header)} {}

    void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

    std::string str() const {
        std::vector<std::size_t> widths;
        for (const auto& row : rows_) {
            if (widths.size() < row.size()) widths.resize(row.size(), 0);
            for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
        }
        std::ostringstream out;
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            for (std::size_t i = 0; i < rows_[r].size(); ++i) {
                if (i > 0) out << "  ";
                if (i == 0) {
                    out << std::left << std::setw(static_cast<int>(widths[i])) << rows_[r][i];
                } else {
                    out << std::right << std::setw(static_cast<int>(widths[i])) << rows_[r][i];
                }
            }
            out << '\n';
            if (r == 0) {
                std::size_t total = 0;
                for (std::size_t i = 0; i < widths.size(); ++i) total += widths[i] + (i > 0 ? 2 : 0);
                out << std::string(total, '-') << '\n';
            }
        }
        return out.str();
    }

private:
    std::vector<std::vector<std::string>> rows_;
};

inline std::string report_table(const BillingReport& report) {
    std::ostringstream out;
    out << "scheme: " << to_string(report.scheme);
    if (report.scheme == SchemeKind::slotted_group) out << " (allocation: " << to_string(report.policy) << ")";
    out << "\ncurrency: " << report.currency << "\nslots: " << report.slot_count << "\n\n";

    TextTable table({"consumer", "period kWh", "exact total", "billed"});
    for (std::size_t c = 0; c < report.consumers.size(); ++c) {
        table.add({report.consumers[c].str(), to_fixed(report.consumer_energy[c].kwh(), 4),
                   report.consumer_totals[c].str(), report.consumer_billed[c].str()});
    }
    Energy total;
    for (const auto& e : report.consumer_energy) total += e;
    table.add({"TOTAL", to_fixed(total.kwh(), 4), report.group_total.str(), report.group_billed.str()});
    out << table.str();
    out << "\npeak slot load: " << report.demand.peak.display() << " kWh, mean: " << to_fixed(report.demand.mean, 4)
        << " kWh, PAR: " << detail::par_text(report.demand.peak_to_average) << "\n";
    if (!report.missing_cells.empty()) {
        out << "missing readings: " << report.missing_cells.size() << " consumer-slot cells billed as zero\n";
    }
    return out.str();
}

inline std::string comparison_table(const SchemeComparison& cmp) {
    TextTable table({"consumer", "monthly", "slotted", "grouped", "slot penalty", "group saving"});
    // Billed amounts throughout, so every column adds up; exact values are in the JSON form.
    for (const auto& c : cmp.consumers) {
        table.add({c.consumer.str(), c.monthly_billed.str(), c.slotted_billed.str(), c.grouped_billed.str(),
                   (c.slotted_billed - c.monthly_billed).str(), (c.slotted_billed - c.grouped_billed).str()});
    }
    table.add({"TOTAL", cmp.report(SchemeKind::monthly_individual).group_billed.str(),
               cmp.report(SchemeKind::slotted_individual).group_billed.str(),
               cmp.report(SchemeKind::slotted_group).group_billed.str(), cmp.billed_slotting_penalty().str(),
               cmp.billed_grouping_saving().str()});
    std::ostringstream out;
    out << table.str();
    const auto& demand = cmp.report(SchemeKind::monthly_individual).demand;
    out << "\npeak slot load: " << demand.peak.display() << " kWh, PAR: " << detail::par_text(demand.peak_to_average)
        << "\n";
    return out.str();
}

}  // namespace tariffsim
