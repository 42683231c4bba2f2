#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <thread>
#include <vector>

#include "apmine/binarize.hpp"
#include "apmine/rational.hpp"

namespace apmine {

// An itemset together with its exact occurrence count. `items` is kept in
// canonical (attribute, state) order and `support` is count/|D| reduced.
struct FrequentItemset {
    std::vector<Item> items;
    std::int64_t support_count = 0;
    Rational support{0, 1};
};

inline bool canonical_less(const FrequentItemset& a, const FrequentItemset& b) {
    if (a.items.size() != b.items.size()) return a.items.size() < b.items.size();
    return a.items < b.items;
}

// Exact per-item occurrence counts.
inline std::map<Item, std::int64_t> count_supports(const std::vector<Transaction>& transactions) {
    if (transactions.empty()) throw ConfigError("count_supports: no transactions");
    std::map<Item, std::int64_t> counts;
    for (const auto& t : transactions)
        for (const auto& it : t.items) ++counts[it];
    return counts;
}

namespace fp {

// Mining works over dense item ids assigned in canonical order, so id order
// and canonical order coincide.
struct Catalog {
    std::vector<Item> items; // id -> Item, canonically sorted

    static Catalog from_transactions(const std::vector<Transaction>& txs) {
        std::set<Item> uniq;
        for (const auto& t : txs)
            for (const auto& it : t.items) uniq.insert(it);
        Catalog c;
        c.items.assign(uniq.begin(), uniq.end());
        return c;
    }

    std::size_t size() const { return items.size(); }

    std::map<Item, std::uint32_t> index() const {
        std::map<Item, std::uint32_t> m;
        for (std::uint32_t i = 0; i < items.size(); ++i) m.emplace(items[i], i);
        return m;
    }
};

struct Node {
    std::uint32_t item = 0; // tree-local item ordinal
    std::int64_t count = 0;
    std::int32_t parent = -1;
    std::int32_t next_sibling_same_item = -1; // header chain link
};

// Prefix tree over frequency-ordered transactions. Item ordinals index the
// tree's own `order` table, not the catalog.
struct Tree {
    std::vector<Node> nodes;                 // nodes[0] is the root
    std::vector<std::int32_t> header_head;   // per ordinal, first node in chain
    std::vector<std::int64_t> ordinal_count; // per ordinal, total support
    std::vector<std::uint32_t> order;        // ordinal -> catalog id (or parent ordinal)

    Tree() {
        nodes.push_back(Node{0, 0, -1, -1});
    }

    void init_items(std::size_t n) {
        header_head.assign(n, -1);
        ordinal_count.assign(n, 0);
    }

    // `path` must be sorted by ordinal ascending (most frequent first).
    void insert(const std::vector<std::uint32_t>& path, std::int64_t count,
                std::vector<std::map<std::uint32_t, std::int32_t>>& child_index) {
        std::int32_t cur = 0;
        for (const auto ord : path) {
            auto& children = child_index[static_cast<std::size_t>(cur)];
            const auto it = children.find(ord);
            if (it != children.end()) {
                cur = it->second;
                nodes[static_cast<std::size_t>(cur)].count += count;
            } else {
                const auto idx = static_cast<std::int32_t>(nodes.size());
                nodes.push_back(Node{ord, count, cur, header_head[ord]});
                header_head[ord] = idx;
                children.emplace(ord, idx);
                child_index.emplace_back();
                cur = idx;
            }
            ordinal_count[ord] += count;
        }
    }
};

struct WeightedTx {
    std::vector<std::uint32_t> items; // catalog ids, ascending
    std::int64_t count = 1;
};

// Frequency ordering shared by every tree built from the same counts:
// descending count, then ascending canonical id.
inline std::vector<std::uint32_t> frequency_order(const std::vector<std::int64_t>& counts,
                                                  std::int64_t min_count) {
    std::vector<std::uint32_t> ids;
    for (std::uint32_t i = 0; i < counts.size(); ++i)
        if (counts[i] >= min_count) ids.push_back(i);
    std::sort(ids.begin(), ids.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (counts[a] != counts[b]) return counts[a] > counts[b];
        return a < b;
    });
    return ids;
}

inline Tree build_tree(const std::vector<WeightedTx>& txs, std::size_t universe,
                       std::int64_t min_count) {
    std::vector<std::int64_t> counts(universe, 0);
    for (const auto& t : txs)
        for (const auto id : t.items) counts[id] += t.count;

    const auto order = frequency_order(counts, min_count);
    std::vector<std::int32_t> ordinal_of(universe, -1);
    for (std::uint32_t o = 0; o < order.size(); ++o) ordinal_of[order[o]] = static_cast<std::int32_t>(o);

    Tree tree;
    tree.order = order;
    tree.init_items(order.size());
    std::vector<std::map<std::uint32_t, std::int32_t>> child_index(1);
    std::vector<std::uint32_t> path;
    for (const auto& t : txs) {
        path.clear();
        for (const auto id : t.items)
            if (ordinal_of[id] >= 0) path.push_back(static_cast<std::uint32_t>(ordinal_of[id]));
        std::sort(path.begin(), path.end());
        if (!path.empty()) tree.insert(path, t.count, child_index);
    }
    return tree;
}

// True when the tree is one chain from the root; fills `path` top-down.
// Nodes are appended in creation order, so a chain means every node's
// parent is its predecessor.
inline bool single_path(const Tree& t, std::vector<std::pair<std::uint32_t, std::int64_t>>& path) {
    path.clear();
    for (std::size_t i = 1; i < t.nodes.size(); ++i)
        if (t.nodes[i].parent != static_cast<std::int32_t>(i) - 1) return false;
    path.reserve(t.nodes.size() - 1);
    for (std::size_t i = 1; i < t.nodes.size(); ++i)
        path.emplace_back(t.nodes[i].item, t.nodes[i].count);
    return true;
}

struct Emitter {
    std::vector<FrequentItemset>* out;
    const Catalog* catalog;
    std::int64_t total;
    std::size_t max_size; // 0 = unbounded
    std::int64_t min_count;

    void emit(std::vector<std::uint32_t> ids, std::int64_t count) const {
        if (max_size && ids.size() > max_size) return;
        std::sort(ids.begin(), ids.end());
        FrequentItemset fs;
        fs.items.reserve(ids.size());
        for (const auto id : ids) fs.items.push_back(catalog->items[id]);
        fs.support_count = count;
        fs.support = Rational(count, total);
        out->push_back(std::move(fs));
    }
};

// Emits every subset of a single path combined with the suffix. The count of
// a subset is the count of its deepest node.
inline void mine_single_path(const std::vector<std::pair<std::uint32_t, std::int64_t>>& path,
                             const Tree& tree, const std::vector<std::uint32_t>& suffix,
                             const Emitter& em) {
    const std::size_t k = path.size();
    std::vector<std::uint32_t> ids;
    for (std::uint64_t mask = 1; mask < (1ull << k); ++mask) {
        if (em.max_size && std::popcount(mask) + suffix.size() > em.max_size) continue;
        ids.assign(suffix.begin(), suffix.end());
        std::int64_t count = 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (mask & (1ull << i)) {
                ids.push_back(tree.order[path[i].first]);
                count = path[i].second; // deepest selected node wins
            }
        }
        em.emit(ids, count);
    }
}

inline void mine_tree(const Tree& tree, const std::vector<std::uint32_t>& suffix, const Emitter& em);

// Processes one header entry: emit {item}+suffix, then recurse into the
// item's conditional tree.
inline void mine_header_item(const Tree& tree, std::uint32_t ord,
                             const std::vector<std::uint32_t>& suffix, const Emitter& em) {
    const std::uint32_t catalog_id = tree.order[ord];
    std::vector<std::uint32_t> new_suffix = suffix;
    new_suffix.push_back(catalog_id);
    em.emit(new_suffix, tree.ordinal_count[ord]);
    if (em.max_size && new_suffix.size() >= em.max_size) return;

    // conditional pattern base: prefix path of every node in the chain
    std::vector<WeightedTx> base;
    for (std::int32_t n = tree.header_head[ord]; n >= 0;
         n = tree.nodes[static_cast<std::size_t>(n)].next_sibling_same_item) {
        const auto& node = tree.nodes[static_cast<std::size_t>(n)];
        WeightedTx wt;
        wt.count = node.count;
        for (std::int32_t p = node.parent; p > 0; p = tree.nodes[static_cast<std::size_t>(p)].parent)
            wt.items.push_back(tree.nodes[static_cast<std::size_t>(p)].item);
        if (wt.items.empty()) continue;
        std::sort(wt.items.begin(), wt.items.end());
        // translate tree ordinals back to catalog ids
        for (auto& it : wt.items) it = tree.order[it];
        base.push_back(std::move(wt));
    }
    if (base.empty()) return;

    const Tree cond = build_tree(base, em.catalog->size(), em.min_count);
    if (cond.order.empty()) return;
    mine_tree(cond, new_suffix, em);
}

inline void mine_tree(const Tree& tree, const std::vector<std::uint32_t>& suffix, const Emitter& em) {
    std::vector<std::pair<std::uint32_t, std::int64_t>> path;
    if (single_path(tree, path)) {
        if (!path.empty()) mine_single_path(path, tree, suffix, em);
        return;
    }
    // ascending frequency = reverse of the insertion order
    for (std::size_t i = tree.order.size(); i-- > 0;)
        mine_header_item(tree, static_cast<std::uint32_t>(i), suffix, em);
}

} // namespace fp

// FP-tree over the frequent items of a transaction list; exposed for
// inspection and tests. Header counts per item equal the item's support
// among the inserted transactions.
class FPTree {
  public:
    FPTree(const std::vector<Transaction>& transactions, std::int64_t min_count)
        : catalog_(fp::Catalog::from_transactions(transactions)) {
        if (min_count < 1) throw ConfigError("min_count must be >= 1");
        const auto index = catalog_.index();
        std::vector<fp::WeightedTx> txs;
        txs.reserve(transactions.size());
        for (const auto& t : transactions) {
            fp::WeightedTx wt;
            for (const auto& it : t.items) wt.items.push_back(index.at(it));
            std::sort(wt.items.begin(), wt.items.end());
            txs.push_back(std::move(wt));
        }
        tree_ = fp::build_tree(txs, catalog_.size(), min_count);
    }

    std::size_t node_count() const { return tree_.nodes.size(); } // includes root

    std::size_t frequent_item_count() const { return tree_.order.size(); }

    // Items ordered as inserted: descending support, ascending canonical.
    std::vector<Item> item_order() const {
        std::vector<Item> out;
        for (const auto id : tree_.order) out.push_back(catalog_.items[id]);
        return out;
    }

    std::int64_t header_count(const Item& item) const {
        for (std::uint32_t ord = 0; ord < tree_.order.size(); ++ord)
            if (catalog_.items[tree_.order[ord]] == item) return tree_.ordinal_count[ord];
        return 0;
    }

    const fp::Tree& raw() const { return tree_; }
    const fp::Catalog& catalog() const { return catalog_; }

  private:
    fp::Catalog catalog_;
    fp::Tree tree_;
};

inline FPTree build_fptree(const std::vector<Transaction>& transactions, std::int64_t min_count) {
    return FPTree(transactions, min_count);
}

// All itemsets with support >= min_support, with exact counts, ordered by
// (size, canonical item order). Deterministic for any thread count: workers
// split the header table and results are re-sorted canonically.
inline std::vector<FrequentItemset> mine_frequent(const std::vector<Transaction>& transactions,
                                                  const Rational& min_support, int threads = 1,
                                                  std::size_t max_itemset_size = 0) {
    if (min_support.num() <= 0 || Rational(1, 1) < min_support)
        throw ConfigError("min_support must be in (0, 1]");
    std::vector<FrequentItemset> out;
    if (transactions.empty()) return out;

    const auto total = static_cast<std::int64_t>(transactions.size());
    const std::int64_t min_count = min_count_for(min_support, total);

    const auto catalog = fp::Catalog::from_transactions(transactions);
    const auto index = catalog.index();
    std::vector<fp::WeightedTx> txs;
    txs.reserve(transactions.size());
    for (const auto& t : transactions) {
        fp::WeightedTx wt;
        for (const auto& it : t.items) wt.items.push_back(index.at(it));
        std::sort(wt.items.begin(), wt.items.end());
        txs.push_back(std::move(wt));
    }
    const fp::Tree tree = fp::build_tree(txs, catalog.size(), min_count);
    if (tree.order.empty()) return out;

    const std::size_t n = tree.order.size();
    if (threads < 1) threads = 1;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);

    std::vector<std::vector<FrequentItemset>> partial(n);
    auto run = [&](std::size_t worker) {
        for (std::size_t i = worker; i < n; i += workers) {
            fp::Emitter em{&partial[i], &catalog, total, max_itemset_size, min_count};
            fp::mine_header_item(tree, static_cast<std::uint32_t>(n - 1 - i), {}, em);
        }
    };
    if (workers <= 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& th : pool) th.join();
    }
    std::size_t count = 0;
    for (const auto& p : partial) count += p.size();
    out.reserve(count);
    for (auto& p : partial)
        for (auto& fs : p) out.push_back(std::move(fs));
    std::sort(out.begin(), out.end(), canonical_less);
    return out;
}

// Verification oracle: enumerate every non-empty subset of the item
// universe and count it by scanning. Capped at 20 distinct items.
inline std::vector<FrequentItemset> brute_force_frequent(const std::vector<Transaction>& transactions,
                                                         const Rational& min_support) {
    if (min_support.num() <= 0 || Rational(1, 1) < min_support)
        throw ConfigError("min_support must be in (0, 1]");
    std::vector<FrequentItemset> out;
    if (transactions.empty()) return out;

    const auto catalog = fp::Catalog::from_transactions(transactions);
    if (catalog.size() > 20)
        throw CapacityError("brute_force_frequent: " + std::to_string(catalog.size()) +
                            " distinct items exceeds the cap of 20");
    const auto index = catalog.index();
    const auto total = static_cast<std::int64_t>(transactions.size());
    const std::int64_t min_count = min_count_for(min_support, total);

    std::vector<std::uint32_t> masks;
    masks.reserve(transactions.size());
    for (const auto& t : transactions) {
        std::uint32_t m = 0;
        for (const auto& it : t.items) m |= 1u << index.at(it);
        masks.push_back(m);
    }
    const std::uint32_t universe = static_cast<std::uint32_t>(catalog.size());
    for (std::uint32_t s = 1; s < (1u << universe); ++s) {
        std::int64_t count = 0;
        for (const auto m : masks)
            if ((m & s) == s) ++count;
        if (count < min_count) continue;
        FrequentItemset fs;
        for (std::uint32_t i = 0; i < universe; ++i)
            if (s & (1u << i)) fs.items.push_back(catalog.items[i]);
        fs.support_count = count;
        fs.support = Rational(count, total);
        out.push_back(std::move(fs));
    }
    std::sort(out.begin(), out.end(), canonical_less);
    return out;
}

// Itemset interchange lines: "count<TAB>token token ...". A leading
// "# transactions: N" records |D| so supports stay exact downstream.
inline void write_itemsets(const std::vector<FrequentItemset>& itemsets, std::int64_t total,
                           const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "# transactions: " << total << "\n";
    for (const auto& fs : itemsets) {
        out << fs.support_count << '\t';
        for (std::size_t i = 0; i < fs.items.size(); ++i) {
            if (i) out << ' ';
            out << item_token(fs.items[i]);
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

struct ItemsetFile {
    std::vector<FrequentItemset> itemsets;
    std::int64_t total = 0;
};

inline ItemsetFile read_itemsets(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    ItemsetFile f;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        if (t.front() == '#') {
            const auto pos = t.find("transactions:");
            if (pos != std::string_view::npos)
                f.total = detail::parse_i64(detail::trim(t.substr(pos + 13)));
            continue;
        }
        const auto tab = t.find('\t');
        if (tab == std::string_view::npos)
            throw ParseError(path + " line " + std::to_string(lineno) + ": expected count<TAB>items");
        FrequentItemset fs;
        fs.support_count = detail::parse_i64(t.substr(0, tab));
        const auto rest = t.substr(tab + 1);
        std::size_t start = 0;
        for (std::size_t i = 0; i <= rest.size(); ++i) {
            if (i == rest.size() || rest[i] == ' ') {
                if (i > start) fs.items.push_back(parse_item_token(rest.substr(start, i - start)));
                start = i + 1;
            }
        }
        std::sort(fs.items.begin(), fs.items.end());
        if (f.total > 0) fs.support = Rational(fs.support_count, f.total);
        f.itemsets.push_back(std::move(fs));
    }
    if (f.total <= 0) throw ParseError(path + ": missing '# transactions: N' header");
    return f;
}

} // namespace apmine
