#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "apmine/rules.hpp"

namespace apmine {

struct ScanMatch {
    std::string rule_text;
    std::int64_t first_timestamp = 0;
};

// Outcome of scanning a rule set against one normal dataset: how many rules
// occur in it (false attacks) and where each was first seen.
struct ValidationReport {
    std::string dataset_label;
    std::int64_t dataset_size = 0;
    std::size_t total_rules = 0;
    std::size_t matched_rules = 0;
    std::int64_t percentage_hundredths = 0; // 100 * percent, truncated
    std::vector<ScanMatch> matches;
    std::vector<std::string> warnings;

    double percentage() const { return static_cast<double>(percentage_hundredths) / 100.0; }
};

// Truncated to two decimals, as hundredths of a percent. Truncation (not
// rounding) reproduces the reference percentages exactly.
inline std::int64_t percentage_hundredths_of(std::size_t part, std::size_t whole) {
    if (whole == 0) return 0;
    return static_cast<std::int64_t>((static_cast<__int128>(part) * 10000) / whole);
}

inline std::string format_percentage(std::int64_t hundredths) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld.%02lld", static_cast<long long>(hundredths / 100),
                  static_cast<long long>(hundredths % 100));
    return buf;
}

// Normal-behavior invariants: every rule holding with confidence 1.0 and at
// least one occurrence. Support floor 1/|D| generalizes the reference run.
inline RuleSet mine_invariants(const std::vector<Transaction>& normal, int threads = 1) {
    if (normal.empty()) throw ConfigError("mine_invariants: no transactions");
    const auto total = static_cast<std::int64_t>(normal.size());
    const auto itemsets = mine_frequent(normal, Rational(1, total), threads);
    return derive_rules(itemsets, total, Rational(1, 1), "invariants");
}

// C = A - B on canonical (antecedent, consequent) keys.
inline RuleSet set_difference(const RuleSet& a, const RuleSet& b) {
    std::vector<AttackRule> out;
    out.reserve(a.size());
    const auto& av = a.rules();
    const auto& bv = b.rules();
    std::size_t i = 0, j = 0;
    while (i < av.size()) {
        while (j < bv.size() && key_less(bv[j], av[i])) ++j;
        if (j < bv.size() && key_equal(bv[j], av[i])) {
            ++i;
            continue;
        }
        out.push_back(av[i++]);
    }
    RuleSet c = RuleSet::from_rules("validated", std::move(out));
    return c;
}

struct InvariantValidationSummary {
    std::size_t total = 0;       // |A|
    std::size_t invalidated = 0; // |A ∩ B|
    std::size_t remaining = 0;   // |C|
    std::int64_t invalidated_pct_hundredths = 0;
};

inline InvariantValidationSummary summarize_difference(const RuleSet& a, const RuleSet& c) {
    InvariantValidationSummary s;
    s.total = a.size();
    s.remaining = c.size();
    s.invalidated = a.size() - c.size();
    s.invalidated_pct_hundredths = percentage_hundredths_of(s.invalidated, s.total);
    return s;
}

namespace detail {

// Transactions deduplicated into bit masks over the item universe, keeping
// the first timestamp each distinct pattern was seen.
struct MaskedTransactions {
    std::map<Item, std::uint32_t> item_bit;
    std::set<std::string> attributes;
    std::size_t words = 0;
    std::vector<std::vector<std::uint64_t>> masks;
    std::vector<std::int64_t> first_ts;

    static MaskedTransactions build(const std::vector<Transaction>& txs) {
        MaskedTransactions m;
        for (const auto& t : txs)
            for (const auto& it : t.items) {
                m.item_bit.emplace(it, 0);
                m.attributes.insert(it.attribute);
            }
        std::uint32_t next = 0;
        for (auto& [item, bit] : m.item_bit) bit = next++;
        m.words = (m.item_bit.size() + 63) / 64;

        std::map<std::vector<std::uint64_t>, std::int64_t> seen;
        for (const auto& t : txs) {
            std::vector<std::uint64_t> mask(m.words, 0);
            for (const auto& it : t.items) {
                const auto bit = m.item_bit.at(it);
                mask[bit / 64] |= 1ull << (bit % 64);
            }
            const auto [it, inserted] = seen.emplace(std::move(mask), t.timestamp);
            if (!inserted && t.timestamp < it->second) it->second = t.timestamp;
        }
        m.masks.reserve(seen.size());
        m.first_ts.reserve(seen.size());
        for (const auto& [mask, ts] : seen) {
            m.masks.push_back(mask);
            m.first_ts.push_back(ts);
        }
        return m;
    }

    // Bit mask for a rule (antecedent plus consequent); nullopt when some
    // item never occurs in the transactions.
    std::optional<std::vector<std::uint64_t>> rule_mask(const AttackRule& r) const {
        std::vector<std::uint64_t> mask(words, 0);
        auto add = [&](const Item& it) {
            const auto f = item_bit.find(it);
            if (f == item_bit.end()) return false;
            mask[f->second / 64] |= 1ull << (f->second % 64);
            return true;
        };
        for (const auto& it : r.antecedent)
            if (!add(it)) return std::nullopt;
        if (!add(r.consequent)) return std::nullopt;
        return mask;
    }
};

inline bool mask_subset(const std::vector<std::uint64_t>& needle,
                        const std::vector<std::uint64_t>& haystack) {
    for (std::size_t i = 0; i < needle.size(); ++i)
        if ((needle[i] & haystack[i]) != needle[i]) return false;
    return true;
}

} // namespace detail

// A rule matches a transaction when the antecedent AND the consequent all
// hold in that row. Reports every rule with at least one match and the
// first matching timestamp. Rules naming attributes the data never shows
// are reported unmatched with a warning.
inline ValidationReport scan_dataset(const RuleSet& rules, const std::vector<Transaction>& normal,
                                     std::string dataset_label = "") {
    ValidationReport rep;
    rep.dataset_label = std::move(dataset_label);
    rep.dataset_size = static_cast<std::int64_t>(normal.size());
    rep.total_rules = rules.size();

    const auto masked = detail::MaskedTransactions::build(normal);
    for (const auto& r : rules.rules()) {
        bool unknown_attr = false;
        for (const auto& it : r.antecedent)
            if (!masked.attributes.count(it.attribute)) unknown_attr = true;
        if (!masked.attributes.count(r.consequent.attribute)) unknown_attr = true;
        if (unknown_attr)
            rep.warnings.push_back("rule '" + serialize_rule(r) +
                                   "' references an attribute absent from the dataset");

        const auto mask = masked.rule_mask(r);
        if (!mask) continue;
        std::int64_t first = -1;
        for (std::size_t m = 0; m < masked.masks.size(); ++m) {
            if (!detail::mask_subset(*mask, masked.masks[m])) continue;
            if (first < 0 || masked.first_ts[m] < first) first = masked.first_ts[m];
        }
        if (first >= 0) {
            ++rep.matched_rules;
            rep.matches.push_back({serialize_rule(r), first});
        }
    }
    rep.percentage_hundredths = percentage_hundredths_of(rep.matched_rules, rep.total_rules);
    return rep;
}

// One report row per dataset, all binarized with the same config as the
// rules under test.
inline std::vector<ValidationReport> summarize_multi_dataset(const RuleSet& rules,
                                                             const std::vector<Dataset>& datasets,
                                                             const BinarizeConfig& cfg) {
    if (datasets.empty()) throw ConfigError("summarize_multi_dataset: no datasets");
    std::vector<ValidationReport> out;
    out.reserve(datasets.size());
    for (const auto& d : datasets) out.push_back(scan_dataset(rules, to_transactions(d, cfg), d.label));
    return out;
}

// Dataset / size / rules found / false-attack % table, human readable.
inline std::string format_validation_table(const std::vector<ValidationReport>& reports) {
    std::string out = "Dataset                          Size      Rules found  False attack %\n";
    for (const auto& r : reports) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-32s %-9lld %-12zu %s%%\n", r.dataset_label.c_str(),
                      static_cast<long long>(r.dataset_size), r.matched_rules,
                      format_percentage(r.percentage_hundredths).c_str());
        out += line;
    }
    return out;
}

inline void write_validation_csv(const std::vector<ValidationReport>& reports,
                                 const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "dataset,size,rules_found,false_attack_pct\n";
    for (const auto& r : reports)
        out << r.dataset_label << "," << r.dataset_size << "," << r.matched_rules << ","
            << format_percentage(r.percentage_hundredths) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

inline void write_matches_csv(const ValidationReport& rep, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "first_timestamp,rule\n";
    for (const auto& m : rep.matches) out << m.first_timestamp << ",\"" << m.rule_text << "\"\n";
    if (!out) throw IoError("write failed: " + path);
}

} // namespace apmine
