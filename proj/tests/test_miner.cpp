#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "apmine/fpgrowth.hpp"

using namespace apmine;

namespace {

Item it(const std::string& name, ItemState s = ItemState::On) { return {name, s}; }

Transaction tx(std::int64_t ts, std::initializer_list<std::string> names) {
    Transaction t;
    t.timestamp = ts;
    for (const auto& n : names) t.items.push_back(it(n));
    std::sort(t.items.begin(), t.items.end());
    return t;
}

struct Lcg {
    std::uint64_t x;
    explicit Lcg(std::uint64_t seed) : x(seed * 2862933555777941757ull + 3037000493ull) {}
    std::uint64_t next() { return x = x * 6364136223846793005ull + 1442695040888963407ull; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
};

std::vector<Transaction> random_transactions(std::uint64_t seed, std::size_t max_items,
                                             std::size_t max_txs) {
    Lcg rng(seed);
    const std::size_t n_items = 2 + rng.below(max_items - 1);
    const std::size_t n_txs = 1 + rng.below(max_txs);
    std::vector<Transaction> txs;
    for (std::size_t i = 0; i < n_txs; ++i) {
        Transaction t;
        t.timestamp = static_cast<std::int64_t>(i);
        for (std::size_t a = 0; a < n_items; ++a)
            if (rng.below(100) < 45) t.items.push_back(it("a" + std::to_string(a)));
        std::sort(t.items.begin(), t.items.end());
        txs.push_back(std::move(t));
    }
    return txs;
}

bool same_itemsets(const std::vector<FrequentItemset>& a, const std::vector<FrequentItemset>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].items != b[i].items || a[i].support_count != b[i].support_count) return false;
    return true;
}

} // namespace

TEST_CASE("count_supports counts exact occurrences") {
    SECTION("four transactions, item in two of them") {
        std::vector<Transaction> txs = {tx(1, {"a", "b"}), tx(2, {"a"}), tx(3, {"b"}), tx(4, {"c"})};
        const auto counts = count_supports(txs);
        CHECK(counts.at(it("a")) == 2);
        CHECK(counts.at(it("b")) == 2);
        CHECK(counts.at(it("c")) == 1);
        CHECK(Rational(counts.at(it("a")), 4) == Rational(1, 2));
    }
    SECTION("the P602 support example at full scale") {
        std::vector<Transaction> txs;
        txs.reserve(410400);
        for (int i = 0; i < 410400; ++i) {
            Transaction t;
            t.timestamp = i + 1;
            t.items = {{"P602", i < 3164 ? ItemState::On : ItemState::Off}};
            txs.push_back(std::move(t));
        }
        const auto counts = count_supports(txs);
        CHECK(counts.at({"P602", ItemState::On}) == 3164);
        CHECK(counts.count({"P602", ItemState::FlowHigh}) == 0);
        CHECK(Rational(3164, 410400) == Rational(counts.at({"P602", ItemState::On}), 410400));
    }
}

TEST_CASE("fp-tree structure") {
    // the classic five-transaction example
    std::vector<Transaction> txs = {tx(1, {"f", "a", "c", "d", "g", "i", "m", "p"}),
                                    tx(2, {"a", "b", "c", "f", "l", "m", "o"}),
                                    tx(3, {"b", "f", "h", "j", "o"}),
                                    tx(4, {"b", "c", "k", "s", "p"}),
                                    tx(5, {"a", "f", "c", "e", "l", "p", "m", "n"})};

    SECTION("header counts equal per-item supports restricted to frequent items") {
        const auto tree = build_fptree(txs, 3);
        const auto counts = count_supports(txs);
        CHECK(tree.frequent_item_count() == 6); // f, c, a, b, m, p
        for (const auto& item : tree.item_order())
            CHECK(tree.header_count(item) == counts.at(item));
        CHECK(tree.header_count(it("g")) == 0);
    }
    SECTION("min_count above the transaction count leaves only the root") {
        const auto tree = build_fptree(txs, 6);
        CHECK(tree.node_count() == 1);
        CHECK(tree.frequent_item_count() == 0);
    }
    SECTION("a single transaction builds a single path") {
        const auto tree = build_fptree({tx(1, {"a", "b"})}, 1);
        CHECK(tree.node_count() == 3);
        CHECK(tree.header_count(it("a")) == 1);
        CHECK(tree.header_count(it("b")) == 1);
    }
}

TEST_CASE("mine_frequent equals the brute force oracle") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const auto txs = random_transactions(seed, 10, 64);
        Lcg rng(seed ^ 0xabcdef);
        const Rational min_support(1 + static_cast<std::int64_t>(rng.below(8)),
                                   static_cast<std::int64_t>(8 + rng.below(8)));
        const auto fast = mine_frequent(txs, min_support);
        const auto slow = brute_force_frequent(txs, min_support);
        INFO("seed " << seed << " support " << min_support.str());
        REQUIRE(same_itemsets(fast, slow));
    }
}

TEST_CASE("min_support one returns only universal itemsets") {
    std::vector<Transaction> txs = {tx(1, {"a", "b"}), tx(2, {"a", "b", "c"}), tx(3, {"a", "b"})};
    const auto res = mine_frequent(txs, Rational(1, 1));
    REQUIRE(res.size() == 3); // {a}, {b}, {a b}
    for (const auto& fs : res) CHECK(fs.support_count == 3);
}

TEST_CASE("minimum positive support returns every occurring itemset") {
    std::vector<Transaction> txs = {tx(1, {"a"}), tx(2, {"b", "c"})};
    const auto res = mine_frequent(txs, Rational(1, static_cast<std::int64_t>(txs.size())));
    CHECK(res.size() == 4); // {a}, {b}, {c}, {b c}
}

TEST_CASE("downward closure holds") {
    const auto txs = random_transactions(1234, 8, 40);
    const auto res = mine_frequent(txs, Rational(1, 10));
    std::map<std::vector<Item>, std::int64_t> by_items;
    for (const auto& fs : res) by_items[fs.items] = fs.support_count;
    for (const auto& fs : res) {
        if (fs.items.size() < 2) continue;
        for (std::size_t skip = 0; skip < fs.items.size(); ++skip) {
            std::vector<Item> sub;
            for (std::size_t i = 0; i < fs.items.size(); ++i)
                if (i != skip) sub.push_back(fs.items[i]);
            auto found = by_items.find(sub);
            REQUIRE(found != by_items.end());
            CHECK(found->second >= fs.support_count);
        }
    }
}

TEST_CASE("raising the threshold never adds itemsets") {
    const auto txs = random_transactions(77, 9, 50);
    const auto low = mine_frequent(txs, Rational(1, 10));
    const auto high = mine_frequent(txs, Rational(3, 10));
    std::set<std::vector<Item>> low_keys;
    for (const auto& fs : low) low_keys.insert(fs.items);
    CHECK(high.size() <= low.size());
    for (const auto& fs : high) CHECK(low_keys.count(fs.items) == 1);
}

TEST_CASE("output is canonical and thread-count independent") {
    const auto txs = random_transactions(4242, 10, 60);
    const auto one = mine_frequent(txs, Rational(1, 20), 1);
    const auto four = mine_frequent(txs, Rational(1, 20), 4);
    REQUIRE(same_itemsets(one, four));
    for (std::size_t i = 1; i < one.size(); ++i) CHECK(canonical_less(one[i - 1], one[i]));
}

TEST_CASE("max itemset size caps the output") {
    const auto txs = random_transactions(5, 8, 40);
    const auto capped = mine_frequent(txs, Rational(1, 40), 1, 2);
    for (const auto& fs : capped) CHECK(fs.items.size() <= 2);
    const auto full = mine_frequent(txs, Rational(1, 40), 1);
    std::size_t small = 0;
    for (const auto& fs : full)
        if (fs.items.size() <= 2) ++small;
    CHECK(capped.size() == small);
}

TEST_CASE("brute force guard rails") {
    std::vector<Transaction> txs;
    Transaction t;
    t.timestamp = 1;
    for (int i = 0; i < 21; ++i) t.items.push_back(it("x" + std::to_string(i)));
    std::sort(t.items.begin(), t.items.end());
    txs.push_back(t);
    REQUIRE_THROWS_AS(brute_force_frequent(txs, Rational(1, 2)), CapacityError);

    SECTION("empty result when nothing is universal at support 1") {
        std::vector<Transaction> two = {tx(1, {"a"}), tx(2, {"b"})};
        CHECK(brute_force_frequent(two, Rational(1, 1)).empty());
    }
    SECTION("singletons reproduce count_supports") {
        const auto rnd = random_transactions(9, 10, 30);
        const auto counts = count_supports(rnd);
        const auto all = brute_force_frequent(rnd, Rational(1, static_cast<std::int64_t>(rnd.size())));
        for (const auto& fs : all) {
            if (fs.items.size() != 1) continue;
            CHECK(fs.support_count == counts.at(fs.items[0]));
        }
    }
}

TEST_CASE("itemset files round-trip with the transaction total") {
    const auto txs = random_transactions(31, 8, 30);
    const auto res = mine_frequent(txs, Rational(1, 8));
    const auto dir = std::filesystem::temp_directory_path() / "apmine_miner_tests";
    std::filesystem::create_directories(dir);
    const auto p = (dir / "itemsets.tsv").string();
    write_itemsets(res, static_cast<std::int64_t>(txs.size()), p);
    const auto back = read_itemsets(p);
    CHECK(back.total == static_cast<std::int64_t>(txs.size()));
    REQUIRE(same_itemsets(back.itemsets, res));
}
