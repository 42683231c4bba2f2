#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "apmine/fpgrowth.hpp"

namespace apmine {

// One candidate attack pattern: realize the antecedent states, force the
// consequent. Canonical form = sorted antecedent plus the consequent.
struct AttackRule {
    std::vector<Item> antecedent; // canonical order
    Item consequent;
    Rational support{0, 1};    // S(antecedent ∪ consequent)
    Rational confidence{0, 1}; // S(X ∪ Y) / S(X)
    bool has_metrics = false;  // false for rules parsed from text

    friend bool key_less(const AttackRule& a, const AttackRule& b) {
        if (a.antecedent != b.antecedent) return a.antecedent < b.antecedent;
        return a.consequent < b.consequent;
    }
    friend bool key_equal(const AttackRule& a, const AttackRule& b) {
        return a.antecedent == b.antecedent && a.consequent == b.consequent;
    }
};

namespace detail {

inline std::string fixed4(const Rational& r) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4f", r.value());
    return buf;
}

// Rule-text item form: flow states print as threshold comparisons.
inline std::string rule_item_text(const Item& it, double flow_threshold) {
    char buf[32];
    switch (it.state) {
        case ItemState::FlowHigh:
            std::snprintf(buf, sizeof(buf), "%g", flow_threshold);
            return it.attribute + ">" + buf;
        case ItemState::FlowLow:
            std::snprintf(buf, sizeof(buf), "%g", flow_threshold);
            return it.attribute + "<" + buf;
        default:
            return it.attribute + "=" + to_string(it.state);
    }
}

} // namespace detail

// Rules keyed by canonical form; inserting a duplicate is a no-op. Bulk
// construction sorts once, incremental insert keeps the order.
class RuleSet {
  public:
    RuleSet() = default;
    explicit RuleSet(std::string label) : label_(std::move(label)) {}

    static RuleSet from_rules(std::string label, std::vector<AttackRule> rules) {
        RuleSet rs(std::move(label));
        std::sort(rules.begin(), rules.end(), [](const AttackRule& a, const AttackRule& b) {
            return key_less(a, b);
        });
        rules.erase(std::unique(rules.begin(), rules.end(),
                                [](const AttackRule& a, const AttackRule& b) { return key_equal(a, b); }),
                    rules.end());
        rs.rules_ = std::move(rules);
        return rs;
    }

    bool insert(AttackRule rule) {
        const auto it = std::lower_bound(rules_.begin(), rules_.end(), rule,
                                         [](const AttackRule& a, const AttackRule& b) { return key_less(a, b); });
        if (it != rules_.end() && key_equal(*it, rule)) return false;
        rules_.insert(it, std::move(rule));
        return true;
    }

    bool contains(const AttackRule& rule) const {
        const auto it = std::lower_bound(rules_.begin(), rules_.end(), rule,
                                         [](const AttackRule& a, const AttackRule& b) { return key_less(a, b); });
        return it != rules_.end() && key_equal(*it, rule);
    }

    const std::vector<AttackRule>& rules() const { return rules_; }
    std::size_t size() const { return rules_.size(); }
    bool empty() const { return rules_.empty(); }
    const std::string& label() const { return label_; }
    void set_label(std::string l) { label_ = std::move(l); }

  private:
    std::string label_;
    std::vector<AttackRule> rules_; // sorted by canonical key, unique
};

namespace detail {

struct IdVecHash {
    std::size_t operator()(const std::vector<std::uint32_t>& v) const {
        std::size_t h = 1469598103934665603ull;
        for (const auto x : v) {
            h ^= x;
            h *= 1099511628211ull;
        }
        return h;
    }
};

} // namespace detail

// Derives association rules from frequent itemsets: for every itemset Z of
// size >= 2 and every y in Z, emit (Z \ {y} => y) when
// S(Z)/S(Z \ {y}) >= min_confidence. The itemset collection must be closed
// under subsets so every antecedent support resolves.
inline RuleSet derive_rules(const std::vector<FrequentItemset>& itemsets,
                            std::int64_t total_transactions, const Rational& min_confidence,
                            std::string label = "attack-patterns") {
    if (min_confidence.num() <= 0 || Rational(1, 1) < min_confidence)
        throw ConfigError("min_confidence must be in (0, 1]");

    // intern items so subset lookups hash small id vectors
    std::map<Item, std::uint32_t> ids;
    for (const auto& fs : itemsets)
        for (const auto& it : fs.items) ids.emplace(it, 0);
    std::uint32_t next = 0;
    for (auto& [item, id] : ids) id = next++;

    std::unordered_map<std::vector<std::uint32_t>, std::int64_t, detail::IdVecHash> support;
    support.reserve(itemsets.size() * 2);
    std::vector<std::vector<std::uint32_t>> keys;
    keys.reserve(itemsets.size());
    for (const auto& fs : itemsets) {
        std::vector<std::uint32_t> key;
        key.reserve(fs.items.size());
        for (const auto& it : fs.items) key.push_back(ids.at(it));
        support.emplace(key, fs.support_count);
        keys.push_back(std::move(key));
    }

    std::vector<AttackRule> rules;
    std::vector<std::uint32_t> antecedent;
    for (std::size_t z = 0; z < itemsets.size(); ++z) {
        const auto& fs = itemsets[z];
        if (fs.items.size() < 2) continue;
        const auto& key = keys[z];
        for (std::size_t y = 0; y < key.size(); ++y) {
            antecedent.clear();
            for (std::size_t i = 0; i < key.size(); ++i)
                if (i != y) antecedent.push_back(key[i]);
            const auto it = support.find(antecedent);
            if (it == support.end())
                throw ConsistencyError("itemset collection not closed under subsets near consequent " +
                                       item_token(fs.items[y]));
            const std::int64_t sx = it->second;
            // S(Z)/S(X) >= min_confidence, exact
            if (static_cast<__int128>(fs.support_count) * min_confidence.den() <
                static_cast<__int128>(min_confidence.num()) * sx)
                continue;
            AttackRule r;
            r.antecedent.reserve(key.size() - 1);
            for (std::size_t i = 0; i < key.size(); ++i)
                if (i != y) r.antecedent.push_back(fs.items[i]);
            r.consequent = fs.items[y];
            r.support = Rational(fs.support_count, total_transactions);
            r.confidence = Rational(fs.support_count, sx);
            r.has_metrics = true;
            rules.push_back(std::move(r));
        }
    }
    return RuleSet::from_rules(std::move(label), std::move(rules));
}

// Text form used throughout rule files, e.g.
// "FIT101>0.5, MV201=Close, MV302=Open, MV303=Close, P302=Off --> MV101=Open".
inline std::string serialize_rule(const AttackRule& r, double flow_threshold = 0.5,
                                  bool with_metrics = false) {
    std::string out;
    for (std::size_t i = 0; i < r.antecedent.size(); ++i) {
        if (i) out += ", ";
        out += detail::rule_item_text(r.antecedent[i], flow_threshold);
    }
    out += " --> ";
    out += detail::rule_item_text(r.consequent, flow_threshold);
    if (with_metrics && r.has_metrics) {
        out += '\t';
        out += detail::fixed4(r.support);
        out += '\t';
        out += detail::fixed4(r.confidence);
    }
    return out;
}

namespace detail {

inline bool name_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// item := NAME ('=' STATE | '>' NUMBER | '<' NUMBER); `at` is the token's
// offset in the full rule text, used for error positions.
inline Item parse_rule_item(std::string_view tok, std::size_t at) {
    std::size_t i = 0;
    while (i < tok.size() && name_char(tok[i])) ++i;
    if (i == 0)
        throw ParseError("rule position " + std::to_string(at) + ": expected attribute name, got '" +
                         std::string(tok) + "'");
    if (i == tok.size())
        throw ParseError("rule position " + std::to_string(at + i) + ": item '" + std::string(tok) +
                         "' has no state");
    const std::string name(tok.substr(0, i));
    const char op = tok[i];
    const std::string_view rest = trim(tok.substr(i + 1));
    if (op == '=') {
        try {
            return Item{name, parse_item_state(rest)};
        } catch (const ParseError&) {
            throw ParseError("rule position " + std::to_string(at + i + 1) + ": unknown state '" +
                             std::string(rest) + "'");
        }
    }
    if (op == '>' || op == '<') {
        try {
            parse_double(rest);
        } catch (const ParseError&) {
            throw ParseError("rule position " + std::to_string(at + i + 1) +
                             ": expected a numeric threshold, got '" + std::string(rest) + "'");
        }
        return Item{name, op == '>' ? ItemState::FlowHigh : ItemState::FlowLow};
    }
    throw ParseError("rule position " + std::to_string(at + i) + ": expected '=', '>' or '<' after '" +
                     name + "'");
}

} // namespace detail

// Parses the canonical rule grammar. Support/confidence are left unset; they
// are only meaningful once evaluated against a dataset.
inline AttackRule parse_rule(std::string_view text) {
    const auto arrow = text.find("-->");
    if (arrow == std::string_view::npos) throw ParseError("rule has no '-->': '" + std::string(text) + "'");
    if (text.find("-->", arrow + 3) != std::string_view::npos)
        throw ParseError("rule has more than one '-->'");

    AttackRule r;
    const std::string_view lhs = text.substr(0, arrow);
    std::size_t start = 0;
    for (std::size_t i = 0; i <= lhs.size(); ++i) {
        if (i == lhs.size() || lhs[i] == ',') {
            const auto raw = lhs.substr(start, i - start);
            const auto tok = detail::trim(raw);
            if (tok.empty())
                throw ParseError("rule position " + std::to_string(start) + ": empty antecedent item");
            const auto off = start + (tok.data() - raw.data());
            r.antecedent.push_back(detail::parse_rule_item(tok, off));
            start = i + 1;
        }
    }
    const auto rhs_raw = text.substr(arrow + 3);
    const auto rhs = detail::trim(rhs_raw);
    if (rhs.empty()) throw ParseError("rule position " + std::to_string(arrow + 3) + ": empty consequent");
    r.consequent = detail::parse_rule_item(rhs, arrow + 3 + (rhs.data() - rhs_raw.data()));

    std::sort(r.antecedent.begin(), r.antecedent.end());
    for (std::size_t i = 1; i < r.antecedent.size(); ++i)
        if (r.antecedent[i].attribute == r.antecedent[i - 1].attribute)
            throw ParseError("duplicate attribute in antecedent: " + r.antecedent[i].attribute);
    for (const auto& it : r.antecedent)
        if (it.attribute == r.consequent.attribute)
            throw ParseError("consequent attribute repeated in antecedent: " + it.attribute);
    return r;
}

// Rules by antecedent size.
inline std::map<std::size_t, std::size_t> antecedent_histogram(const RuleSet& rs) {
    std::map<std::size_t, std::size_t> hist;
    for (const auto& r : rs.rules()) ++hist[r.antecedent.size()];
    return hist;
}

// Rule files: one rule per line, optional trailing `\t support \t confidence`.
inline void write_rules(const RuleSet& rs, const std::string& path, bool with_metrics = true,
                        double flow_threshold = 0.5,
                        const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << "\n";
    for (const auto& r : rs.rules()) out << serialize_rule(r, flow_threshold, with_metrics) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

inline RuleSet read_rules(const std::string& path, std::string label) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<AttackRule> rules;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        // metrics columns, if present, are display-only; drop them
        const auto tab = t.find('\t');
        if (tab != std::string_view::npos) t = detail::trim(t.substr(0, tab));
        try {
            rules.push_back(parse_rule(t));
        } catch (const ParseError& e) {
            throw ParseError(path + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return RuleSet::from_rules(std::move(label), std::move(rules));
}

} // namespace apmine
