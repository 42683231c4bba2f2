#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "apmine/historian.hpp"

namespace apmine {

// Binary state tokens an attribute can take after the feature transform.
enum class ItemState : std::uint8_t { Open, Close, On, Off, FlowHigh, FlowLow };

inline const char* to_string(ItemState s) {
    switch (s) {
        case ItemState::Open: return "Open";
        case ItemState::Close: return "Close";
        case ItemState::On: return "On";
        case ItemState::Off: return "Off";
        case ItemState::FlowHigh: return "FlowHigh";
        case ItemState::FlowLow: return "FlowLow";
    }
    return "?";
}

inline ItemState parse_item_state(std::string_view s) {
    if (s == "Open") return ItemState::Open;
    if (s == "Close" || s == "Closed") return ItemState::Close;
    if (s == "On") return ItemState::On;
    if (s == "Off") return ItemState::Off;
    if (s == "FlowHigh") return ItemState::FlowHigh;
    if (s == "FlowLow") return ItemState::FlowLow;
    throw ParseError("unknown item state: '" + std::string(s) + "'");
}

// The unit of mining: one attribute pinned to one binary state.
struct Item {
    std::string attribute;
    ItemState state = ItemState::Off;

    friend auto operator<=>(const Item& a, const Item& b) {
        if (const auto c = a.attribute <=> b.attribute; c != 0) return c;
        return a.state <=> b.state;
    }
    friend bool operator==(const Item&, const Item&) = default;
};

// Transaction-file token, e.g. "MV101=Open" or "FIT101=FlowHigh".
inline std::string item_token(const Item& it) {
    return it.attribute + "=" + to_string(it.state);
}

inline Item parse_item_token(std::string_view tok) {
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 >= tok.size())
        throw ParseError("bad item token: '" + std::string(tok) + "'");
    return Item{std::string(tok.substr(0, eq)), parse_item_state(tok.substr(eq + 1))};
}

// One binarized historian row; items are kept sorted in canonical
// (attribute, state) order, at most one state per attribute.
struct Transaction {
    std::int64_t timestamp = 0;
    std::vector<Item> items;

    friend bool operator==(const Transaction&, const Transaction&) = default;
};

enum class ValvePosition : std::uint8_t { Open, Close, Transition };

// The 15 sensors/actuators mined by default.
inline std::vector<std::string> default_selected_attributes() {
    return {"FIT101", "MV101", "P101", "FIT201", "MV201", "P203", "P205",
            "FIT301", "MV301", "MV302", "MV303", "MV304", "P302", "FIT601", "P602"};
}

struct BinarizeConfig {
    double flow_threshold = 0.5;
    std::vector<std::string> selected_attributes = default_selected_attributes();
    // SWaT raw codes; configurable because other dataset vintages differ.
    std::map<int, ItemState> pump_raw_encoding = {{1, ItemState::Off}, {2, ItemState::On}};
    std::map<int, ValvePosition> valve_raw_encoding = {
        {0, ValvePosition::Transition}, {1, ValvePosition::Close}, {2, ValvePosition::Open}};
};

namespace detail {

inline int decode_raw_code(double raw) {
    const double r = std::nearbyint(raw);
    if (!std::isfinite(raw) || std::fabs(raw - r) > 1e-9) return INT32_MIN;
    return static_cast<int>(r);
}

} // namespace detail

// Flow presence: at or above the threshold means flow.
inline ItemState binarize_flow(double flow, const BinarizeConfig& cfg) {
    if (!std::isfinite(flow)) throw NumericError("non-finite flow value");
    return flow >= cfg.flow_threshold ? ItemState::FlowHigh : ItemState::FlowLow;
}

inline ValvePosition decode_valve(double raw, const BinarizeConfig& cfg) {
    const int code = detail::decode_raw_code(raw);
    const auto it = cfg.valve_raw_encoding.find(code);
    if (code == INT32_MIN || it == cfg.valve_raw_encoding.end())
        throw EncodingError("raw valve value " + detail::format_double(raw) + " has no encoding");
    return it->second;
}

inline ItemState decode_pump(double raw, const BinarizeConfig& cfg) {
    const int code = detail::decode_raw_code(raw);
    const auto it = cfg.pump_raw_encoding.find(code);
    if (code == INT32_MIN || it == cfg.pump_raw_encoding.end())
        throw EncodingError("raw pump value " + detail::format_double(raw) + " has no encoding");
    return it->second;
}

// Ternary valve to binary: Open/Close pass through, Transition is resolved
// by the paired flow meter reading against the flow threshold.
inline ItemState resolve_valve_transition(double valve_raw, double paired_flow,
                                          const BinarizeConfig& cfg) {
    switch (decode_valve(valve_raw, cfg)) {
        case ValvePosition::Open: return ItemState::Open;
        case ValvePosition::Close: return ItemState::Close;
        case ValvePosition::Transition:
            return paired_flow >= cfg.flow_threshold ? ItemState::Open : ItemState::Close;
    }
    throw EncodingError("unreachable valve position");
}

// One transaction per record, restricted to the selected attributes.
inline std::vector<Transaction> to_transactions(const Dataset& d, const BinarizeConfig& cfg) {
    if (cfg.selected_attributes.empty()) throw ConfigError("no attributes selected");
    if (cfg.flow_threshold <= 0) throw ConfigError("flow_threshold must be positive");

    struct Column {
        std::string name;
        AttrKind kind;
        std::size_t col;
        std::size_t paired_col; // ternary valves only
    };
    std::vector<Column> cols;
    cols.reserve(cfg.selected_attributes.size());
    for (const auto& name : cfg.selected_attributes) {
        const auto c = d.column(name);
        if (!c) throw ConfigError("selected attribute '" + name + "' not in dataset '" + d.label + "'");
        const Attribute& a = d.schema[*c];
        Column col{name, a.kind, *c, 0};
        if (a.kind == AttrKind::TernaryValve) {
            const auto pc = d.column(a.paired_flow_meter);
            if (!pc)
                throw ConfigError("ternary valve '" + name + "' needs paired flow meter '" +
                                  a.paired_flow_meter + "' in the dataset");
            col.paired_col = *pc;
        }
        cols.push_back(std::move(col));
    }
    std::sort(cols.begin(), cols.end(), [](const Column& a, const Column& b) { return a.name < b.name; });

    std::vector<Transaction> out;
    out.reserve(d.records.size());
    for (const auto& rec : d.records) {
        Transaction t;
        t.timestamp = rec.timestamp;
        t.items.reserve(cols.size());
        for (const auto& c : cols) {
            switch (c.kind) {
                case AttrKind::Analog:
                    t.items.push_back({c.name, binarize_flow(rec.values[c.col], cfg)});
                    break;
                case AttrKind::BinaryActuator:
                    t.items.push_back({c.name, decode_pump(rec.values[c.col], cfg)});
                    break;
                case AttrKind::TernaryValve:
                    t.items.push_back({c.name, resolve_valve_transition(rec.values[c.col],
                                                                        rec.values[c.paired_col], cfg)});
                    break;
            }
        }
        std::sort(t.items.begin(), t.items.end());
        out.push_back(std::move(t));
    }
    return out;
}

struct DropResult {
    std::vector<Transaction> transactions;
    std::vector<std::string> dropped;
};

// Removes attributes whose state never varies; they carry no information
// for rule mining.
inline DropResult drop_constant_attributes(const std::vector<Transaction>& transactions) {
    if (transactions.empty()) throw ConfigError("drop_constant_attributes: no transactions");
    std::map<std::string, std::set<ItemState>> states;
    for (const auto& t : transactions)
        for (const auto& it : t.items) states[it.attribute].insert(it.state);

    std::set<std::string> constant;
    DropResult res;
    for (const auto& [name, st] : states)
        if (st.size() == 1) {
            constant.insert(name);
            res.dropped.push_back(name);
        }
    res.transactions.reserve(transactions.size());
    for (const auto& t : transactions) {
        Transaction nt;
        nt.timestamp = t.timestamp;
        for (const auto& it : t.items)
            if (!constant.count(it.attribute)) nt.items.push_back(it);
        res.transactions.push_back(std::move(nt));
    }
    return res;
}

// One line per transaction, items space-separated in canonical order.
inline void write_transactions(const std::vector<Transaction>& txs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& t : txs) {
        for (std::size_t i = 0; i < t.items.size(); ++i) {
            if (i) out << ' ';
            out << item_token(t.items[i]);
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

// Inverse of write_transactions. The line format carries no timestamps, so
// rows are numbered 0..n-1.
inline std::vector<Transaction> read_transactions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<Transaction> out;
    std::string line;
    std::int64_t row = 0;
    while (std::getline(in, line)) {
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        Transaction tx;
        tx.timestamp = row++;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= t.size(); ++i) {
            if (i == t.size() || t[i] == ' ') {
                if (i > start) tx.items.push_back(parse_item_token(t.substr(start, i - start)));
                start = i + 1;
            }
        }
        std::sort(tx.items.begin(), tx.items.end());
        for (std::size_t i = 1; i < tx.items.size(); ++i)
            if (tx.items[i].attribute == tx.items[i - 1].attribute)
                throw ParseError(path + " line " + std::to_string(row) + ": attribute '" +
                                 tx.items[i].attribute + "' appears twice");
        out.push_back(std::move(tx));
    }
    return out;
}

} // namespace apmine
