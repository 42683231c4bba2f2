#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "apmine/binarize.hpp"

using namespace apmine;

namespace {

// MV101 paired with FIT101, plus a pump; the shape of most SWaT stages.
Dataset stage_dataset() {
    Dataset d;
    d.schema = {{"MV101", AttrKind::TernaryValve, "", "FIT101"},
                {"FIT101", AttrKind::Analog, "m3/h", ""},
                {"P101", AttrKind::BinaryActuator, "", ""}};
    d.label = "stage1";
    return d;
}

} // namespace

TEST_CASE("valve transition resolves through the paired flow meter") {
    BinarizeConfig cfg;
    // raw 0 = Transition, 1 = Close, 2 = Open
    CHECK(resolve_valve_transition(0, 0.3, cfg) == ItemState::Close);
    CHECK(resolve_valve_transition(0, 0.5, cfg) == ItemState::Open);
    CHECK(resolve_valve_transition(0, 0.49999, cfg) == ItemState::Close);
    CHECK(resolve_valve_transition(2, 0.0, cfg) == ItemState::Open);
    CHECK(resolve_valve_transition(1, 9.9, cfg) == ItemState::Close);
    REQUIRE_THROWS_MATCHES(resolve_valve_transition(7, 0.0, cfg), EncodingError,
                           Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("7")));
}

TEST_CASE("flow binarization threshold is inclusive on the high side") {
    BinarizeConfig cfg;
    CHECK(binarize_flow(0.5, cfg) == ItemState::FlowHigh);
    CHECK(binarize_flow(0.49999, cfg) == ItemState::FlowLow);
    CHECK(binarize_flow(2.47, cfg) == ItemState::FlowHigh);
    CHECK(binarize_flow(0.0, cfg) == ItemState::FlowLow);
    REQUIRE_THROWS_AS(binarize_flow(std::nan(""), cfg), NumericError);

    // direct-comparison oracle over generated values
    std::uint64_t x = 99;
    for (int i = 0; i < 200; ++i) {
        x = x * 6364136223846793005ull + 1442695040888963407ull;
        const double v = static_cast<double>(x >> 11) * 0x1.0p-53 * 4.0;
        CHECK((binarize_flow(v, cfg) == ItemState::FlowHigh) == (v >= cfg.flow_threshold));
    }
}

TEST_CASE("to_transactions encodes one item per selected attribute") {
    auto d = stage_dataset();
    d.records.push_back({1, {2, 0.0, 1}});  // MV101 Open, no flow, pump off
    d.records.push_back({2, {0, 0.3, 2}});  // Transition with low flow -> Close
    d.records.push_back({3, {0, 1.8, 2}});  // Transition with flow -> Open
    BinarizeConfig cfg;
    cfg.selected_attributes = {"MV101", "FIT101", "P101"};
    const auto txs = to_transactions(d, cfg);
    REQUIRE(txs.size() == 3);
    for (const auto& t : txs) CHECK(t.items.size() == 3);
    CHECK(txs[0].items == std::vector<Item>{{"FIT101", ItemState::FlowLow},
                                            {"MV101", ItemState::Open},
                                            {"P101", ItemState::Off}});
    CHECK(txs[1].items == std::vector<Item>{{"FIT101", ItemState::FlowLow},
                                            {"MV101", ItemState::Close},
                                            {"P101", ItemState::On}});
    CHECK(txs[2].items == std::vector<Item>{{"FIT101", ItemState::FlowHigh},
                                            {"MV101", ItemState::Open},
                                            {"P101", ItemState::On}});
}

TEST_CASE("ternary valves can use an unselected paired flow meter") {
    auto d = stage_dataset();
    d.records.push_back({1, {0, 0.7, 2}});
    BinarizeConfig cfg;
    cfg.selected_attributes = {"MV101", "P101"}; // FIT101 present in data, not selected
    const auto txs = to_transactions(d, cfg);
    REQUIRE(txs.size() == 1);
    CHECK(txs[0].items == std::vector<Item>{{"MV101", ItemState::Open}, {"P101", ItemState::On}});
}

TEST_CASE("missing paired flow meter is a configuration error") {
    Dataset d;
    d.schema = {{"MV101", AttrKind::TernaryValve, "", "FIT101"},
                {"FIT101", AttrKind::Analog, "", ""}};
    d.records.push_back({1, {0, 0.0}});
    // schema pairing present, but the selected attribute set may point at a
    // dataset that lacks the meter entirely
    Dataset d2;
    d2.schema = {{"MV101", AttrKind::TernaryValve, "", "FITX"}};
    REQUIRE_THROWS_AS(validate_schema(d2.schema), SchemaError);

    BinarizeConfig cfg;
    cfg.selected_attributes = {"MV999"};
    REQUIRE_THROWS_AS(to_transactions(d, cfg), ConfigError);
}

TEST_CASE("binarization is pointwise") {
    auto d = stage_dataset();
    d.records.push_back({1, {2, 0.0, 1}});
    d.records.push_back({2, {1, 4.0, 2}});
    BinarizeConfig cfg;
    cfg.selected_attributes = {"MV101", "FIT101", "P101"};
    const auto both = to_transactions(d, cfg);

    Dataset first = d;
    first.records.resize(1);
    const auto only_first = to_transactions(first, cfg);
    CHECK(only_first[0].items == both[0].items);
}

TEST_CASE("idempotence: identity encoding over an already binary column") {
    Dataset d;
    d.schema = {{"P101", AttrKind::BinaryActuator, "", ""}};
    d.records.push_back({1, {2}});
    d.records.push_back({2, {1}});
    BinarizeConfig cfg;
    cfg.selected_attributes = {"P101"};
    const auto once = to_transactions(d, cfg);
    // re-encode the binarized stream through the same encoding
    Dataset again;
    again.schema = d.schema;
    for (std::size_t i = 0; i < once.size(); ++i)
        again.records.push_back(
            {once[i].timestamp, {once[i].items[0].state == ItemState::On ? 2.0 : 1.0}});
    CHECK(to_transactions(again, cfg) == once);
}

TEST_CASE("drop_constant_attributes removes single-state attributes") {
    std::vector<Transaction> txs;
    for (int i = 0; i < 10; ++i) {
        Transaction t;
        t.timestamp = i;
        t.items = {{"P602", ItemState::Off},
                   {"MV101", i == 4 ? ItemState::Close : ItemState::Open},
                   {"FIT101", i % 2 ? ItemState::FlowHigh : ItemState::FlowLow}};
        std::sort(t.items.begin(), t.items.end());
        txs.push_back(t);
    }
    const auto res = drop_constant_attributes(txs);
    CHECK(res.dropped == std::vector<std::string>{"P602"});
    for (const auto& t : res.transactions) CHECK(t.items.size() == 2);
}

TEST_CASE("drop_constant_attributes keeps the varying remainder") {
    // 15 attributes, 3 constant
    std::vector<Transaction> txs;
    for (int i = 0; i < 32; ++i) {
        Transaction t;
        t.timestamp = i;
        for (int a = 0; a < 15; ++a) {
            const bool constant = a < 3;
            const bool on = constant ? true : ((i >> (a % 5)) & 1) != 0;
            t.items.push_back({"P" + std::to_string(100 + a), on ? ItemState::On : ItemState::Off});
        }
        std::sort(t.items.begin(), t.items.end());
        txs.push_back(t);
    }
    const auto res = drop_constant_attributes(txs);
    // oracle: count attributes with more than one distinct state
    std::map<std::string, std::set<ItemState>> states;
    for (const auto& t : txs)
        for (const auto& it : t.items) states[it.attribute].insert(it.state);
    std::size_t varying = 0;
    for (const auto& [n, s] : states)
        if (s.size() > 1) ++varying;
    CHECK(varying == 12);
    CHECK(res.transactions[0].items.size() == varying);
    CHECK(res.dropped.size() == 3);
}

TEST_CASE("transaction files round-trip") {
    std::vector<Transaction> txs;
    Transaction t;
    t.timestamp = 0;
    t.items = {{"FIT101", ItemState::FlowHigh}, {"MV101", ItemState::Open}, {"P101", ItemState::Off}};
    txs.push_back(t);
    const auto dir = std::filesystem::temp_directory_path() / "apmine_binarize_tests";
    std::filesystem::create_directories(dir);
    const auto p = (dir / "tx.txt").string();
    write_transactions(txs, p);
    const auto back = read_transactions(p);
    REQUIRE(back.size() == 1);
    CHECK(back[0].items == txs[0].items);
}

TEST_CASE("a full-size dataset binarizes one transaction per record") {
    auto d = stage_dataset();
    d.records.reserve(410400);
    for (int i = 0; i < 410400; ++i)
        d.records.push_back({i + 1, {2, i < 3164 ? 1.0 : 0.0, i < 3164 ? 2.0 : 1.0}});
    BinarizeConfig cfg;
    cfg.selected_attributes = {"MV101", "FIT101", "P101"};
    const auto txs = to_transactions(d, cfg);
    CHECK(txs.size() == 410400);
}
