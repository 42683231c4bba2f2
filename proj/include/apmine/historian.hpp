#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "apmine/errors.hpp"

namespace apmine {

enum class AttrKind { Analog, BinaryActuator, TernaryValve };

inline const char* to_string(AttrKind k) {
    switch (k) {
        case AttrKind::Analog: return "analog";
        case AttrKind::BinaryActuator: return "binary-actuator";
        case AttrKind::TernaryValve: return "ternary-valve";
    }
    return "?";
}

inline AttrKind parse_attr_kind(std::string_view s) {
    if (s == "analog") return AttrKind::Analog;
    if (s == "binary-actuator") return AttrKind::BinaryActuator;
    if (s == "ternary-valve") return AttrKind::TernaryValve;
    throw SchemaError("unknown attribute kind: '" + std::string(s) + "'");
}

struct Attribute {
    std::string name;
    AttrKind kind = AttrKind::Analog;
    std::string unit;
    std::string paired_flow_meter; // ternary valves only
};

using AttributeSchema = std::vector<Attribute>;

// Names must be unique and every ternary valve must point at an analog
// attribute of the same schema.
inline void validate_schema(const AttributeSchema& schema) {
    std::map<std::string, const Attribute*> by_name;
    for (const auto& a : schema) {
        if (a.name == "Timestamp") throw SchemaError("'Timestamp' is reserved for the time column");
        if (!by_name.emplace(a.name, &a).second)
            throw SchemaError("duplicate attribute name: " + a.name);
    }
    for (const auto& a : schema) {
        if (a.kind != AttrKind::TernaryValve) continue;
        if (a.paired_flow_meter.empty())
            throw SchemaError("ternary valve " + a.name + " declares no paired flow meter");
        const auto it = by_name.find(a.paired_flow_meter);
        if (it == by_name.end())
            throw SchemaError("ternary valve " + a.name + " pairs with unknown attribute " +
                              a.paired_flow_meter);
        if (it->second->kind != AttrKind::Analog)
            throw SchemaError("ternary valve " + a.name + " pairs with non-analog attribute " +
                              a.paired_flow_meter);
    }
}

// One historian row. Values are parallel to the owning dataset's schema.
struct PlantRecord {
    std::int64_t timestamp = 0; // seconds since epoch
    std::vector<double> values;
};

struct Dataset {
    AttributeSchema schema;
    std::vector<PlantRecord> records;
    std::string label;

    std::size_t size() const { return records.size(); }

    std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t i = 0; i < schema.size(); ++i)
            if (schema[i].name == name) return i;
        return std::nullopt;
    }

    std::size_t column_or_throw(std::string_view name) const {
        if (auto c = column(name)) return *c;
        throw SchemaError("dataset '" + label + "' has no attribute " + std::string(name));
    }
};

struct LoadOptions {
    bool require_1hz = true; // enforce one-second cadence between rows
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

inline double parse_double(std::string_view s) {
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError("not a number: '" + std::string(s) + "'");
    return v;
}

inline std::int64_t parse_i64(std::string_view s) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError("not an integer: '" + std::string(s) + "'");
    return v;
}

// Howard Hinnant's days-from-civil; avoids timezone-dependent mktime.
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

// Accepts plain integer epoch seconds, "YYYY-MM-DD HH:MM:SS" and the SWaT
// wall-clock form "DD/MM/YYYY HH:MM:SS AM|PM". All wall-clock forms are UTC.
inline std::int64_t parse_timestamp(std::string_view raw) {
    const std::string_view s = detail::trim(raw);
    if (s.empty()) throw ParseError("empty timestamp");
    if (s.find_first_not_of("0123456789-") == std::string_view::npos &&
        s.find('-', 1) == std::string_view::npos) {
        return detail::parse_i64(s);
    }
    std::int64_t year = 0;
    unsigned month = 0, day = 0, hh = 0, mm = 0, ss = 0;
    std::string_view rest;
    if (s.size() >= 10 && s[4] == '-' && s[7] == '-') {
        year = detail::parse_i64(s.substr(0, 4));
        month = static_cast<unsigned>(detail::parse_i64(s.substr(5, 2)));
        day = static_cast<unsigned>(detail::parse_i64(s.substr(8, 2)));
        rest = detail::trim(s.substr(10));
    } else {
        const auto s1 = s.find('/');
        const auto s2 = s.find('/', s1 == std::string_view::npos ? 0 : s1 + 1);
        if (s1 == std::string_view::npos || s2 == std::string_view::npos)
            throw ParseError("unrecognized timestamp: '" + std::string(s) + "'");
        day = static_cast<unsigned>(detail::parse_i64(s.substr(0, s1)));
        month = static_cast<unsigned>(detail::parse_i64(s.substr(s1 + 1, s2 - s1 - 1)));
        const auto sp = s.find(' ', s2);
        if (sp == std::string_view::npos) throw ParseError("timestamp missing time: '" + std::string(s) + "'");
        year = detail::parse_i64(s.substr(s2 + 1, sp - s2 - 1));
        rest = detail::trim(s.substr(sp + 1));
    }
    bool pm = false, am = false;
    if (rest.size() >= 2) {
        const std::string_view tail = rest.substr(rest.size() - 2);
        if (tail == "AM" || tail == "am") am = true;
        if (tail == "PM" || tail == "pm") pm = true;
        if (am || pm) rest = detail::trim(rest.substr(0, rest.size() - 2));
    }
    if (!rest.empty()) {
        std::vector<std::string_view> hms;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= rest.size(); ++i) {
            if (i == rest.size() || rest[i] == ':') {
                hms.push_back(rest.substr(start, i - start));
                start = i + 1;
            }
        }
        if (hms.size() < 2 || hms.size() > 3)
            throw ParseError("unrecognized time of day: '" + std::string(rest) + "'");
        hh = static_cast<unsigned>(detail::parse_i64(hms[0]));
        mm = static_cast<unsigned>(detail::parse_i64(hms[1]));
        ss = hms.size() == 3 ? static_cast<unsigned>(detail::parse_i64(hms[2])) : 0;
    }
    if (pm && hh != 12) hh += 12;
    if (am && hh == 12) hh = 0;
    if (month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 59)
        throw ParseError("timestamp out of range: '" + std::string(s) + "'");
    return detail::days_from_civil(year, month, day) * 86400 + hh * 3600 + mm * 60 + ss;
}

// Loads a historian CSV against a declared schema. The header must contain a
// "Timestamp" column plus every schema attribute (order-insensitive); extra
// file columns are ignored. Leading '#' lines are treated as metadata and
// skipped. Missing cells are rejected, timestamps must be strictly
// increasing, and with opts.require_1hz the cadence must be one second.
inline Dataset load_csv(const std::string& path, AttributeSchema schema, std::string label = "",
                        const LoadOptions& opts = {}) {
    validate_schema(schema);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    bool have_header = false;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        for (auto f : detail::split_csv_line(t)) header.emplace_back(f);
        have_header = true;
        break;
    }
    if (!have_header) throw ParseError(path + ": no header row");

    std::map<std::string, std::size_t> col_of;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (!col_of.emplace(header[i], i).second)
            throw SchemaError(path + ": duplicate column '" + header[i] + "'");
    }
    const auto ts_it = col_of.find("Timestamp");
    if (ts_it == col_of.end()) throw SchemaError(path + ": missing column 'Timestamp'");
    const std::size_t ts_col = ts_it->second;

    std::vector<std::size_t> attr_col(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        const auto it = col_of.find(schema[i].name);
        if (it == col_of.end()) throw SchemaError(path + ": missing column '" + schema[i].name + "'");
        attr_col[i] = it->second;
    }

    Dataset d;
    d.schema = std::move(schema);
    d.label = label.empty() ? path : std::move(label);

    std::size_t row = 0;
    while (std::getline(in, line)) {
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        ++row;
        const auto fields = detail::split_csv_line(t);
        if (fields.size() != header.size())
            throw ParseError(path + " row " + std::to_string(row) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        PlantRecord rec;
        try {
            rec.timestamp = parse_timestamp(fields[ts_col]);
        } catch (const ParseError& e) {
            throw ParseError(path + " row " + std::to_string(row) + ": " + e.what());
        }
        rec.values.reserve(d.schema.size());
        for (std::size_t i = 0; i < d.schema.size(); ++i) {
            const auto f = fields[attr_col[i]];
            if (f.empty())
                throw ParseError(path + " row " + std::to_string(row) + ": missing value in column '" +
                                 d.schema[i].name + "'");
            try {
                rec.values.push_back(detail::parse_double(f));
            } catch (const ParseError&) {
                throw ParseError(path + " row " + std::to_string(row) + ": column '" +
                                 d.schema[i].name + "': not a number: '" + std::string(f) + "'");
            }
        }
        if (!d.records.empty()) {
            const auto prev = d.records.back().timestamp;
            if (rec.timestamp <= prev)
                throw OrderingError(path + " row " + std::to_string(row) +
                                    ": timestamp not strictly increasing (" +
                                    std::to_string(rec.timestamp) + " after " + std::to_string(prev) + ")");
            if (opts.require_1hz && rec.timestamp != prev + 1)
                throw OrderingError(path + " row " + std::to_string(row) +
                                    ": cadence gap; expected 1 Hz, got delta " +
                                    std::to_string(rec.timestamp - prev) + " s");
        }
        d.records.push_back(std::move(rec));
    }
    return d;
}

// Writes a dataset in the historian CSV format: optional '# key: value'
// metadata lines, then a header row, then one row per record. Timestamps are
// integer epoch seconds; values use shortest round-trip formatting.
inline void save_csv(const Dataset& d, const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << "\n";
    out << "Timestamp";
    for (const auto& a : d.schema) out << "," << a.name;
    out << "\n";
    for (const auto& r : d.records) {
        out << r.timestamp;
        for (const double v : r.values) out << "," << detail::format_double(v);
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

// Records with start <= timestamp <= end (closed interval). An empty result
// is a valid dataset.
inline Dataset slice_window(const Dataset& d, std::int64_t start, std::int64_t end) {
    if (start > end) throw OrderingError("slice_window: start > end");
    Dataset out;
    out.schema = d.schema;
    out.label = d.label + "[" + std::to_string(start) + "," + std::to_string(end) + "]";
    const auto lo = std::lower_bound(d.records.begin(), d.records.end(), start,
                                     [](const PlantRecord& r, std::int64_t t) { return r.timestamp < t; });
    const auto hi = std::upper_bound(d.records.begin(), d.records.end(), end,
                                     [](std::int64_t t, const PlantRecord& r) { return t < r.timestamp; });
    out.records.assign(lo, hi);
    return out;
}

} // namespace apmine
