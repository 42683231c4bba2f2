#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "apmine/plantsim.hpp"
#include "apmine/validate.hpp"

namespace apmine {

// One declarative document drives every command; CLI flags override keys.
struct PipelineConfig {
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir = "out";

    AttributeSchema schema = trace_schema();
    bool require_1hz = true;

    BinarizeConfig binarize;
    bool drop_constants = false;

    // Attack-pattern mining thresholds. Placeholders by design: runs against
    // real attack data must set them explicitly.
    Rational support{3, 10};
    Rational confidence{9, 10};
    std::size_t max_itemset_size = 0;

    PlantParams plant;
    std::int64_t duration = 3600;

    // inputs, normally given as CLI flags
    std::string input;
    std::string scripts;
    std::string rules_file;
    std::vector<std::string> datasets;
};

namespace cfg {

using nlohmann::json;

inline void get(const json& j, const char* key, double& v) {
    if (j.contains(key)) v = j.at(key).get<double>();
}
inline void get(const json& j, const char* key, bool& v) {
    if (j.contains(key)) v = j.at(key).get<bool>();
}
inline void get(const json& j, const char* key, int& v) {
    if (j.contains(key)) v = j.at(key).get<int>();
}
inline void get(const json& j, const char* key, std::int64_t& v) {
    if (j.contains(key)) v = j.at(key).get<std::int64_t>();
}
inline void get(const json& j, const char* key, std::uint64_t& v) {
    if (j.contains(key)) v = j.at(key).get<std::uint64_t>();
}
inline void get(const json& j, const char* key, std::string& v) {
    if (j.contains(key)) v = j.at(key).get<std::string>();
}
inline void get(const json& j, const char* key, Rational& v) {
    if (j.contains(key)) v = Rational::parse(j.at(key).get<std::string>());
}

inline void load_binarize(const json& j, BinarizeConfig& b) {
    get(j, "flow_threshold", b.flow_threshold);
    if (j.contains("selected_attributes"))
        b.selected_attributes = j.at("selected_attributes").get<std::vector<std::string>>();
    if (j.contains("pump_raw_encoding")) {
        b.pump_raw_encoding.clear();
        for (const auto& [k, v] : j.at("pump_raw_encoding").items())
            b.pump_raw_encoding[std::stoi(k)] = parse_item_state(v.get<std::string>());
    }
    if (j.contains("valve_raw_encoding")) {
        b.valve_raw_encoding.clear();
        for (const auto& [k, v] : j.at("valve_raw_encoding").items()) {
            const auto s = v.get<std::string>();
            ValvePosition p;
            if (s == "Open") p = ValvePosition::Open;
            else if (s == "Close" || s == "Closed") p = ValvePosition::Close;
            else if (s == "Transition") p = ValvePosition::Transition;
            else throw ConfigError("valve_raw_encoding: unknown position '" + s + "'");
            b.valve_raw_encoding[std::stoi(k)] = p;
        }
    }
}

inline void load_thresholds(const json& j, TankThresholds& t) {
    get(j, "low_low", t.low_low);
    get(j, "low", t.low);
    get(j, "high", t.high);
    get(j, "high_high", t.high_high);
}

inline void load_plant(const json& j, PlantParams& p) {
    get(j, "dt", p.dt);
    if (j.contains("tank_area"))
        for (std::size_t t = 0; t < kTanks; ++t)
            get(j.at("tank_area"), tank_names()[t], p.tank_area[t]);
    get(j, "inlet_rate", p.inlet_rate);
    get(j, "p101_rate", p.p101_rate);
    get(j, "p302_rate", p.p302_rate);
    get(j, "ro_draw_rate", p.ro_draw_rate);
    get(j, "ro_recycle_frac", p.ro_recycle_frac);
    get(j, "p602_rate", p.p602_rate);
    if (j.contains("levels"))
        for (std::size_t t = 0; t < kTanks; ++t)
            if (j.at("levels").contains(tank_names()[t]))
                load_thresholds(j.at("levels").at(tank_names()[t]), p.levels[t]);
    get(j, "tank_brim_mm", p.tank_brim_mm);
    get(j, "orp_setpoint", p.orp_setpoint);
    get(j, "orp_band_low", p.orp_band_low);
    get(j, "orp_band_high", p.orp_band_high);
    get(j, "ph_setpoint", p.ph_setpoint);
    get(j, "ph_band_low", p.ph_band_low);
    get(j, "ph_band_high", p.ph_band_high);
    get(j, "orp_dose_rate", p.orp_dose_rate);
    get(j, "orp_relax_rate", p.orp_relax_rate);
    get(j, "ph_dose_rate", p.ph_dose_rate);
    get(j, "ph_relax_rate", p.ph_relax_rate);
    get(j, "backwash_offset", p.backwash_offset);
    get(j, "backwash_period", p.backwash_period);
    get(j, "backwash_duration", p.backwash_duration);
    get(j, "flush_duration", p.flush_duration);
    get(j, "flow_threshold", p.flow_threshold);
    get(j, "spoofed_flow_value", p.spoofed_flow_value);
    get(j, "noise_amplitude", p.noise_amplitude);
    get(j, "settle_time", p.settle_time);
    get(j, "cooldown", p.cooldown);
    get(j, "starvation_hold", p.starvation_hold);
    get(j, "latched_control", p.latched_control);
}

inline AttributeSchema load_schema(const json& j) {
    AttributeSchema s;
    for (const auto& e : j) {
        Attribute a;
        a.name = e.at("name").get<std::string>();
        a.kind = parse_attr_kind(e.at("kind").get<std::string>());
        if (e.contains("unit")) a.unit = e.at("unit").get<std::string>();
        if (e.contains("paired_flow_meter"))
            a.paired_flow_meter = e.at("paired_flow_meter").get<std::string>();
        s.push_back(std::move(a));
    }
    validate_schema(s);
    return s;
}

} // namespace cfg

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError("config " + path + ": " + e.what());
    }
    PipelineConfig c;
    cfg::get(j, "seed", c.seed);
    cfg::get(j, "threads", c.threads);
    cfg::get(j, "out_dir", c.out_dir);
    cfg::get(j, "require_1hz", c.require_1hz);
    cfg::get(j, "duration", c.duration);
    if (j.contains("schema")) c.schema = cfg::load_schema(j.at("schema"));
    if (j.contains("binarize")) cfg::load_binarize(j.at("binarize"), c.binarize);
    cfg::get(j, "drop_constants", c.drop_constants);
    if (j.contains("mine")) {
        cfg::get(j.at("mine"), "support", c.support);
        cfg::get(j.at("mine"), "confidence", c.confidence);
        cfg::get(j.at("mine"), "max_itemset_size", c.max_itemset_size);
    }
    if (j.contains("plant")) cfg::load_plant(j.at("plant"), c.plant);
    return c;
}

namespace detail {

inline std::filesystem::path out_path(const PipelineConfig& c, const std::string& name) {
    std::filesystem::create_directories(c.out_dir);
    return std::filesystem::path(c.out_dir) / name;
}

inline std::vector<std::pair<std::string, std::string>> seed_meta(const PipelineConfig& c) {
    return {{"seed", std::to_string(c.seed)}};
}

inline Dataset load_input_dataset(const PipelineConfig& c, const std::string& path) {
    LoadOptions opts;
    opts.require_1hz = c.require_1hz;
    return load_csv(path, c.schema, std::filesystem::path(path).stem().string(), opts);
}

// Transactions either from a historian CSV or from a transaction-line file.
inline std::vector<Transaction> load_any_transactions(const PipelineConfig& c,
                                                      const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv")
        return to_transactions(load_input_dataset(c, path), c.binarize);
    return read_transactions(path);
}

inline void write_histogram_csv(const RuleSet& rs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "antecedent_size,rule_count\n";
    for (const auto& [size, count] : antecedent_histogram(rs))
        out << size << "," << count << "\n";
    if (!out) throw IoError("write failed: " + path);
}

} // namespace detail

// simulate: closed-loop normal run -> historian trace CSV.
inline void cmd_simulate(const PipelineConfig& c) {
    const auto trace = run_normal(c.plant, c.duration, c.seed);
    const auto path = detail::out_path(c, "trace.csv");
    save_csv(trace, path.string(), detail::seed_meta(c));
    std::cout << "wrote " << path.string() << " (" << trace.size() << " rows)\n";
}

// replay: scripts against one plant session -> trace + scenario table.
inline void cmd_replay(const PipelineConfig& c) {
    if (c.scripts.empty()) throw ConfigError("replay needs --scripts");
    const auto scripts = read_scripts(c.scripts);
    const auto res = run_scenario_table(scripts, c.plant, c.seed);
    const auto trace_path = detail::out_path(c, "replay_trace.csv");
    const auto table_path = detail::out_path(c, "scenario_table.csv");
    save_csv(res.trace, trace_path.string(), detail::seed_meta(c));
    write_scenario_csv(res.rows, table_path.string(), detail::seed_meta(c));
    std::cout << "wrote " << trace_path.string() << " (" << res.trace.size() << " rows)\n";
    std::cout << "wrote " << table_path.string() << " (" << res.rows.size() << " scenarios)\n";
    for (const auto& r : res.rows)
        std::cout << "  #" << r.index << " [" << r.start << "," << r.end << "] "
                  << to_string(r.classification) << "\n";
}

// ingest: validate a historian CSV and re-emit it in canonical form.
inline void cmd_ingest(const PipelineConfig& c) {
    if (c.input.empty()) throw ConfigError("ingest needs --input");
    const auto d = detail::load_input_dataset(c, c.input);
    const auto path = detail::out_path(c, "ingested.csv");
    save_csv(d, path.string());
    std::cout << "loaded " << c.input << ": " << d.size() << " rows, " << d.schema.size()
              << " attributes\n";
    std::cout << "wrote " << path.string() << "\n";
}

// binarize: historian CSV -> transaction lines.
inline void cmd_binarize(const PipelineConfig& c) {
    if (c.input.empty()) throw ConfigError("binarize needs --input");
    const auto d = detail::load_input_dataset(c, c.input);
    auto txs = to_transactions(d, c.binarize);
    std::vector<std::string> dropped;
    if (c.drop_constants) {
        auto res = drop_constant_attributes(txs);
        txs = std::move(res.transactions);
        dropped = std::move(res.dropped);
    }
    const auto path = detail::out_path(c, "transactions.txt");
    write_transactions(txs, path.string());
    std::cout << "wrote " << path.string() << " (" << txs.size() << " transactions)\n";
    if (!dropped.empty()) {
        std::cout << "dropped constant attributes:";
        for (const auto& d2 : dropped) std::cout << " " << d2;
        std::cout << "\n";
    }
}

// mine: dataset or transactions -> itemsets + rules + antecedent histogram.
inline void cmd_mine(const PipelineConfig& c) {
    if (c.input.empty()) throw ConfigError("mine needs --input");
    auto txs = detail::load_any_transactions(c, c.input);
    if (c.drop_constants) txs = drop_constant_attributes(txs).transactions;
    const auto total = static_cast<std::int64_t>(txs.size());
    const auto itemsets = mine_frequent(txs, c.support, c.threads, c.max_itemset_size);
    const auto rules = derive_rules(itemsets, total, c.confidence, "attack-patterns");

    const auto itemsets_path = detail::out_path(c, "itemsets.tsv");
    const auto rules_path = detail::out_path(c, "rules.txt");
    const auto hist_path = detail::out_path(c, "antecedent_histogram.csv");
    write_itemsets(itemsets, total, itemsets_path.string());
    write_rules(rules, rules_path.string(), true, c.binarize.flow_threshold);
    detail::write_histogram_csv(rules, hist_path.string());
    std::cout << "mined " << itemsets.size() << " frequent itemsets (support " << c.support.str()
              << ") from " << total << " transactions\n";
    std::cout << "derived " << rules.size() << " rules (confidence " << c.confidence.str() << ")\n";
    std::cout << "wrote " << itemsets_path.string() << ", " << rules_path.string() << ", "
              << hist_path.string() << "\n";
}

// rules: recompute rules + histogram from a saved itemset file.
inline void cmd_rules(const PipelineConfig& c) {
    if (c.input.empty()) throw ConfigError("rules needs --input");
    const auto file = read_itemsets(c.input);
    const auto rules = derive_rules(file.itemsets, file.total, c.confidence, "attack-patterns");
    const auto rules_path = detail::out_path(c, "rules.txt");
    const auto hist_path = detail::out_path(c, "antecedent_histogram.csv");
    write_rules(rules, rules_path.string(), true, c.binarize.flow_threshold);
    detail::write_histogram_csv(rules, hist_path.string());
    std::cout << "derived " << rules.size() << " rules from " << file.itemsets.size()
              << " itemsets\n";
    std::cout << "wrote " << rules_path.string() << ", " << hist_path.string() << "\n";
}

// validate-invariants: A minus invariants mined from normal data.
inline void cmd_validate_invariants(const PipelineConfig& c) {
    if (c.rules_file.empty()) throw ConfigError("validate-invariants needs --rules");
    if (c.input.empty()) throw ConfigError("validate-invariants needs --input (normal data)");
    const auto a = read_rules(c.rules_file, "attack-patterns");
    const auto normal = detail::load_any_transactions(c, c.input);
    const auto b = mine_invariants(normal, c.threads);
    const auto cset = set_difference(a, b);
    const auto summary = summarize_difference(a, cset);

    const auto c_path = detail::out_path(c, "validated_rules.txt");
    write_rules(cset, c_path.string(), false, c.binarize.flow_threshold);
    const auto sum_path = detail::out_path(c, "invariant_summary.csv");
    std::ofstream out(sum_path);
    out << "total_rules,invariants,invalidated,remaining,invalidated_pct\n";
    out << summary.total << "," << b.size() << "," << summary.invalidated << "," << summary.remaining
        << "," << format_percentage(summary.invalidated_pct_hundredths) << "\n";
    std::cout << "invariants mined from normal data: " << b.size() << "\n";
    std::cout << summary.invalidated << " out of " << summary.total << " i.e. "
              << format_percentage(summary.invalidated_pct_hundredths)
              << "% attack patterns invalidated; " << summary.remaining << " remain\n";
    std::cout << "wrote " << c_path.string() << ", " << sum_path.string() << "\n";
}

// validate-dataset: scan rules against one or more normal datasets.
inline void cmd_validate_dataset(const PipelineConfig& c) {
    if (c.rules_file.empty()) throw ConfigError("validate-dataset needs --rules");
    if (c.datasets.empty()) throw ConfigError("validate-dataset needs at least one --dataset");
    const auto rules = read_rules(c.rules_file, "attack-patterns");
    std::vector<Dataset> ds;
    ds.reserve(c.datasets.size());
    for (const auto& p : c.datasets) ds.push_back(detail::load_input_dataset(c, p));
    const auto reports = summarize_multi_dataset(rules, ds, c.binarize);

    const auto table_path = detail::out_path(c, "dataset_validation.csv");
    write_validation_csv(reports, table_path.string());
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto matches_path =
            detail::out_path(c, "matches_" + std::to_string(i + 1) + ".csv");
        write_matches_csv(reports[i], matches_path.string());
        for (const auto& w : reports[i].warnings) std::cerr << "warning: " << w << "\n";
    }
    std::cout << format_validation_table(reports);
    std::cout << "wrote " << table_path.string() << "\n";
}

// report: one markdown digest of whatever artifacts the out dir holds.
inline void cmd_report(const PipelineConfig& c) {
    const auto path = detail::out_path(c, "report.md");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "# Attack pattern mining report\n\n";
    out << "Seed: " << c.seed << "\n\n";
    const auto include_file = [&](const std::string& name, const std::string& title) {
        const auto p = std::filesystem::path(c.out_dir) / name;
        if (!std::filesystem::exists(p)) return;
        out << "## " << title << "\n\n```\n";
        std::ifstream in(p);
        std::string line;
        std::size_t shown = 0;
        while (std::getline(in, line) && shown < 40) {
            out << line << "\n";
            ++shown;
        }
        if (shown == 40) out << "...\n";
        out << "```\n\n";
    };
    include_file("antecedent_histogram.csv", "Antecedent size histogram");
    include_file("invariant_summary.csv", "Invariant validation");
    include_file("dataset_validation.csv", "Dataset validation");
    include_file("scenario_table.csv", "Replay scenarios");
    std::cout << "wrote " << path.string() << "\n";
}

} // namespace apmine
