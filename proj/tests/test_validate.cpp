#include <catch2/catch_amalgamated.hpp>

#include "apmine/validate.hpp"

using namespace apmine;

namespace {

Item it(const std::string& name, ItemState s = ItemState::On) { return {name, s}; }

Transaction tx(std::int64_t ts, std::vector<Item> items) {
    Transaction t;
    t.timestamp = ts;
    t.items = std::move(items);
    std::sort(t.items.begin(), t.items.end());
    return t;
}

struct Lcg {
    std::uint64_t x;
    explicit Lcg(std::uint64_t seed) : x(seed * 2862933555777941757ull + 3037000493ull) {}
    std::uint64_t next() { return x = x * 6364136223846793005ull + 1442695040888963407ull; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
};

AttackRule make_rule(const std::string& text) { return parse_rule(text); }

// synthetic canonical rules P<k>=On --> Q=On, distinct by k
std::vector<AttackRule> numbered_rules(std::size_t n, std::size_t start = 0) {
    std::vector<AttackRule> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        AttackRule r;
        r.antecedent = {it("P" + std::to_string(start + i))};
        r.consequent = it("Q");
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace

TEST_CASE("mine_invariants keeps only confidence-one rules") {
    // MV101=Open always co-occurs with FIT101 flow; one counterexample for x->y
    std::vector<Transaction> normal;
    for (int i = 0; i < 20; ++i)
        normal.push_back(tx(i, {{"MV101", i % 2 ? ItemState::Open : ItemState::Close},
                                {"FIT101", i % 2 ? ItemState::FlowHigh : ItemState::FlowLow}}));
    const auto b = mine_invariants(normal);
    CHECK(b.label() == "invariants");
    CHECK(b.contains(make_rule("MV101=Open --> FIT101>0.5")));
    CHECK(b.contains(make_rule("FIT101<0.5 --> MV101=Close")));

    // re-evaluate every invariant against the source transactions
    for (const auto& r : b.rules()) {
        std::size_t s_x = 0, s_xy = 0;
        for (const auto& t : normal) {
            const bool ante = std::includes(t.items.begin(), t.items.end(), r.antecedent.begin(),
                                            r.antecedent.end());
            if (!ante) continue;
            ++s_x;
            if (std::binary_search(t.items.begin(), t.items.end(), r.consequent)) ++s_xy;
        }
        CHECK(s_x == s_xy);
        CHECK(s_x >= 1);
    }

    auto broken = normal;
    broken.push_back(tx(100, {{"MV101", ItemState::Open}, {"FIT101", ItemState::FlowLow}}));
    const auto b2 = mine_invariants(broken);
    CHECK_FALSE(b2.contains(make_rule("MV101=Open --> FIT101>0.5")));
}

TEST_CASE("set difference on canonical forms") {
    SECTION("plain set algebra") {
        auto a = RuleSet::from_rules("A", numbered_rules(3));
        auto b = RuleSet::from_rules("B", numbered_rules(1, 1)); // {P1}
        const auto c = set_difference(a, b);
        CHECK(c.label() == "validated");
        CHECK(c.size() == 2);
        CHECK(c.contains(a.rules()[0]));
        CHECK_FALSE(c.contains(b.rules()[0]));
    }
    SECTION("empty B returns A") {
        auto a = RuleSet::from_rules("A", numbered_rules(5));
        const auto c = set_difference(a, RuleSet("B"));
        CHECK(c.size() == a.size());
    }
    SECTION("desk-scale reproduction of the reference cardinalities") {
        // |A| = 8350, |A ∩ B| = 7170 (1/100 scale), B padded with extras
        auto a_rules = numbered_rules(8350);
        auto b_rules = numbered_rules(7170);
        auto extra = numbered_rules(1000, 20000);
        b_rules.insert(b_rules.end(), extra.begin(), extra.end());
        const auto a = RuleSet::from_rules("A", std::move(a_rules));
        const auto b = RuleSet::from_rules("B", std::move(b_rules));
        const auto c = set_difference(a, b);
        CHECK(c.size() == 1180);
        const auto s = summarize_difference(a, c);
        CHECK(s.invalidated == 7170);
        CHECK_THAT(static_cast<double>(s.invalidated_pct_hundredths) / 100.0,
                   Catch::Matchers::WithinAbs(85.87, 0.05));
    }
    SECTION("full-scale percentage from the reference counts") {
        CHECK(percentage_hundredths_of(717060, 835020) == 8587);
        CHECK(format_percentage(8587) == "85.87");
    }
    SECTION("difference properties on fuzzed sets") {
        Lcg rng(5);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<AttackRule> av, bv;
            for (std::size_t i = 0; i < 40; ++i) {
                if (rng.below(2)) av.push_back(numbered_rules(1, i)[0]);
                if (rng.below(2)) bv.push_back(numbered_rules(1, i)[0]);
            }
            const auto a = RuleSet::from_rules("A", av);
            const auto b = RuleSet::from_rules("B", bv);
            const auto c = set_difference(a, b);
            std::size_t inter = 0;
            for (const auto& r : a.rules())
                if (b.contains(r)) ++inter;
            CHECK(c.size() + inter == a.size());
            for (const auto& r : c.rules()) CHECK_FALSE(b.contains(r));
        }
    }
}

TEST_CASE("scan_dataset matches full rule patterns per row") {
    std::vector<Transaction> normal;
    for (int i = 0; i < 10; ++i) {
        std::vector<Item> items = {{"MV101", ItemState::Close},
                                   {"P101", ItemState::Off},
                                   {"FIT101", ItemState::FlowLow}};
        if (i == 7) {
            items[0].state = ItemState::Open;
            items[2].state = ItemState::FlowHigh;
        }
        normal.push_back(tx(100 + i, std::move(items)));
    }
    RuleSet rules("A");
    rules.insert(make_rule("MV101=Open --> FIT101>0.5"));    // holds only in row 7
    rules.insert(make_rule("MV101=Open --> FIT101<0.5"));    // never fully holds
    rules.insert(make_rule("P999=On --> MV101=Open"));       // unknown attribute

    const auto rep = scan_dataset(rules, normal, "toy");
    CHECK(rep.total_rules == 3);
    CHECK(rep.matched_rules == 1);
    REQUIRE(rep.matches.size() == 1);
    CHECK(rep.matches[0].first_timestamp == 107);
    REQUIRE(rep.warnings.size() == 1);
    CHECK_THAT(rep.warnings[0], Catch::Matchers::ContainsSubstring("P999"));
}

TEST_CASE("scan_dataset equals a naive double loop oracle") {
    Lcg rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<Transaction> txs;
        const std::size_t n = 5 + rng.below(40);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<Item> items;
            for (int a = 0; a < 6; ++a)
                items.push_back({"a" + std::to_string(a), rng.below(2) ? ItemState::On : ItemState::Off});
            txs.push_back(tx(static_cast<std::int64_t>(1000 + i), std::move(items)));
        }
        std::vector<AttackRule> rules;
        for (int k = 0; k < 12; ++k) {
            AttackRule r;
            std::vector<int> attrs = {0, 1, 2, 3, 4, 5};
            for (std::size_t i2 = attrs.size(); i2 > 1; --i2)
                std::swap(attrs[i2 - 1], attrs[rng.below(i2)]);
            const std::size_t len = 1 + rng.below(3);
            for (std::size_t i2 = 0; i2 < len; ++i2)
                r.antecedent.push_back(
                    {"a" + std::to_string(attrs[i2]), rng.below(2) ? ItemState::On : ItemState::Off});
            r.consequent = {"a" + std::to_string(attrs[len]),
                            rng.below(2) ? ItemState::On : ItemState::Off};
            std::sort(r.antecedent.begin(), r.antecedent.end());
            rules.push_back(std::move(r));
        }
        const auto rs = RuleSet::from_rules("A", std::move(rules));
        const auto rep = scan_dataset(rs, txs, "fuzz");

        std::size_t matched = 0;
        std::map<std::string, std::int64_t> first;
        for (const auto& r : rs.rules()) {
            std::int64_t hit = -1;
            for (const auto& t : txs) {
                auto whole = r.antecedent;
                whole.push_back(r.consequent);
                std::sort(whole.begin(), whole.end());
                if (std::includes(t.items.begin(), t.items.end(), whole.begin(), whole.end())) {
                    hit = t.timestamp;
                    break;
                }
            }
            if (hit >= 0) {
                ++matched;
                first[serialize_rule(r)] = hit;
            }
        }
        INFO("trial " << trial);
        REQUIRE(rep.matched_rules == matched);
        for (const auto& m : rep.matches) {
            REQUIRE(first.count(m.rule_text) == 1);
            CHECK(first.at(m.rule_text) == m.first_timestamp);
        }
    }
}

TEST_CASE("scan is monotone in the transaction list") {
    Lcg rng(21);
    std::vector<Transaction> txs;
    for (std::size_t i = 0; i < 30; ++i) {
        std::vector<Item> items;
        for (int a = 0; a < 5; ++a)
            items.push_back({"a" + std::to_string(a), rng.below(2) ? ItemState::On : ItemState::Off});
        txs.push_back(tx(static_cast<std::int64_t>(i), std::move(items)));
    }
    std::vector<AttackRule> rules;
    for (int a = 0; a < 4; ++a) {
        AttackRule r;
        r.antecedent = {{"a" + std::to_string(a), ItemState::On}};
        r.consequent = {"a" + std::to_string(a + 1), ItemState::Off};
        rules.push_back(std::move(r));
    }
    const auto rs = RuleSet::from_rules("A", std::move(rules));
    std::vector<Transaction> prefix(txs.begin(), txs.begin() + 10);
    const auto r1 = scan_dataset(rs, prefix, "p");
    const auto r2 = scan_dataset(rs, txs, "all");
    CHECK(r2.matched_rules >= r1.matched_rules);

    std::set<std::string> m2;
    for (const auto& m : r2.matches) m2.insert(m.rule_text);
    for (const auto& m : r1.matches) CHECK(m2.count(m.rule_text) == 1);
}

TEST_CASE("percentages reproduce the reference table by truncation") {
    CHECK(percentage_hundredths_of(3026, 117960) == 256);
    CHECK(percentage_hundredths_of(2472, 117960) == 209);
    CHECK(percentage_hundredths_of(1707, 117960) == 144);
    CHECK(format_percentage(256) == "2.56");
    CHECK(format_percentage(209) == "2.09");
    CHECK(format_percentage(144) == "1.44");
    CHECK(percentage_hundredths_of(0, 0) == 0);
}

TEST_CASE("multi dataset summary emits one row per dataset") {
    Dataset d;
    d.schema = {{"P101", AttrKind::BinaryActuator, "", ""},
                {"FIT101", AttrKind::Analog, "m3/h", ""}};
    d.label = "normal-a";
    for (int i = 0; i < 50; ++i)
        d.records.push_back({i + 1, {i % 2 ? 2.0 : 1.0, i % 2 ? 1.0 : 0.0}});
    Dataset d2 = d;
    d2.label = "normal-b";
    d2.records.resize(20);

    RuleSet rules("A");
    rules.insert(make_rule("P101=On --> FIT101>0.5"));
    BinarizeConfig cfg;
    cfg.selected_attributes = {"P101", "FIT101"};

    const auto reports = summarize_multi_dataset(rules, {d, d2, d}, cfg);
    REQUIRE(reports.size() == 3);
    CHECK(reports[0].dataset_label == "normal-a");
    CHECK(reports[0].dataset_size == 50);
    CHECK(reports[1].dataset_size == 20);
    // identical datasets give identical rows
    CHECK(reports[2].matched_rules == reports[0].matched_rules);
    CHECK(reports[2].percentage_hundredths == reports[0].percentage_hundredths);
    // percentages recomputed from counts agree
    for (const auto& r : reports)
        CHECK(r.percentage_hundredths == percentage_hundredths_of(r.matched_rules, r.total_rules));
    const auto table = format_validation_table(reports);
    CHECK_THAT(table, Catch::Matchers::ContainsSubstring("normal-a"));
}

TEST_CASE("report is stable under rule reordering") {
    std::vector<Transaction> txs;
    for (int i = 0; i < 16; ++i)
        txs.push_back(tx(i, {{"x", i % 4 ? ItemState::On : ItemState::Off},
                             {"y", i % 2 ? ItemState::On : ItemState::Off}}));
    std::vector<AttackRule> rules = {make_rule("x=On --> y=On"), make_rule("y=Off --> x=Off"),
                                     make_rule("x=Off --> y=Off")};
    const auto rs1 = RuleSet::from_rules("A", rules);
    std::reverse(rules.begin(), rules.end());
    const auto rs2 = RuleSet::from_rules("A", rules);
    const auto p1 = scan_dataset(rs1, txs, "d");
    const auto p2 = scan_dataset(rs2, txs, "d");
    CHECK(p1.matched_rules == p2.matched_rules);
    CHECK(p1.percentage_hundredths == p2.percentage_hundredths);
}
