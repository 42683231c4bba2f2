// apminer: mine candidate attack patterns from water-plant historian data,
// validate them against normal behavior, and replay them on the simulator.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "apmine/pipeline.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::string support, confidence;
    std::string out;
    int threads = 0;
    std::uint64_t seed = 0;
    bool have_seed = false;
    bool have_threads = false;
};

void attach_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "JSON config file; flags override its keys");
    cmd->add_option("--support", f.support, "minimum support as a rational N/D or decimal");
    cmd->add_option("--confidence", f.confidence, "minimum confidence as a rational N/D or decimal");
    cmd->add_option("--out", f.out, "output directory (default: out)");
    cmd->add_option("--threads", f.threads, "worker threads for mining")
        ->check(CLI::PositiveNumber)
        ->each([&](const std::string&) { f.have_threads = true; });
    cmd->add_option("--seed", f.seed, "top-level seed; recorded in seeded outputs")
        ->each([&](const std::string&) { f.have_seed = true; });
}

apmine::PipelineConfig resolve(const CommonFlags& f) {
    apmine::PipelineConfig c;
    if (!f.config.empty()) c = apmine::load_config(f.config);
    if (!f.support.empty()) c.support = apmine::Rational::parse(f.support);
    if (!f.confidence.empty()) c.confidence = apmine::Rational::parse(f.confidence);
    if (!f.out.empty()) c.out_dir = f.out;
    if (f.have_threads) c.threads = f.threads;
    if (f.have_seed) c.seed = f.seed;
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"attack pattern mining toolkit for plant historian data"};
    app.require_subcommand(1);

    CommonFlags f_sim, f_ingest, f_bin, f_mine, f_rules, f_vinv, f_vds, f_replay, f_report;
    std::string input, scripts, rules_file;
    std::vector<std::string> datasets;
    std::int64_t duration = 0;
    bool drop_constants = false;
    std::size_t max_size = 0;

    auto* sim = app.add_subcommand("simulate", "run the plant normally and write a historian trace");
    attach_common(sim, f_sim);
    sim->add_option("--duration", duration, "simulated seconds (default 3600)");

    auto* ingest = app.add_subcommand("ingest", "validate a historian CSV and re-emit it canonically");
    attach_common(ingest, f_ingest);
    ingest->add_option("--input", input, "historian CSV")->required();

    auto* bin = app.add_subcommand("binarize", "transform a historian CSV into mining transactions");
    attach_common(bin, f_bin);
    bin->add_option("--input", input, "historian CSV")->required();
    bin->add_flag("--drop-constants", drop_constants, "remove attributes with a single state");

    auto* mine = app.add_subcommand("mine", "mine frequent itemsets and rules from data");
    attach_common(mine, f_mine);
    mine->add_option("--input", input, "historian CSV or transaction file")->required();
    mine->add_flag("--drop-constants", drop_constants, "remove attributes with a single state");
    mine->add_option("--max-size", max_size, "cap itemset size for exploratory runs (0 = unbounded)");

    auto* rules = app.add_subcommand("rules", "derive rules from a saved itemset file");
    attach_common(rules, f_rules);
    rules->add_option("--input", input, "itemset file from 'mine'")->required();

    auto* vinv = app.add_subcommand("validate-invariants",
                                    "drop rules that are invariants of normal behavior (C = A - B)");
    attach_common(vinv, f_vinv);
    vinv->add_option("--rules", rules_file, "attack-pattern rule file (set A)")->required();
    vinv->add_option("--input", input, "normal historian CSV or transaction file")->required();

    auto* vds = app.add_subcommand("validate-dataset",
                                   "scan rules against normal datasets and report false attacks");
    attach_common(vds, f_vds);
    vds->add_option("--rules", rules_file, "rule file to scan")->required();
    vds->add_option("--dataset", datasets, "normal historian CSV (repeatable)")->required();

    auto* replay = app.add_subcommand("replay", "replay attack scripts on the simulator");
    attach_common(replay, f_replay);
    replay->add_option("--scripts", scripts, "attack script file")->required();

    auto* report = app.add_subcommand("report", "summarize artifacts in the output directory");
    attach_common(report, f_report);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            auto c = resolve(f_sim);
            if (duration > 0) c.duration = duration;
            apmine::cmd_simulate(c);
        } else if (ingest->parsed()) {
            auto c = resolve(f_ingest);
            c.input = input;
            apmine::cmd_ingest(c);
        } else if (bin->parsed()) {
            auto c = resolve(f_bin);
            c.input = input;
            c.drop_constants = drop_constants;
            apmine::cmd_binarize(c);
        } else if (mine->parsed()) {
            auto c = resolve(f_mine);
            c.input = input;
            c.drop_constants = drop_constants;
            if (max_size > 0) c.max_itemset_size = max_size;
            apmine::cmd_mine(c);
        } else if (rules->parsed()) {
            auto c = resolve(f_rules);
            c.input = input;
            apmine::cmd_rules(c);
        } else if (vinv->parsed()) {
            auto c = resolve(f_vinv);
            c.rules_file = rules_file;
            c.input = input;
            apmine::cmd_validate_invariants(c);
        } else if (vds->parsed()) {
            auto c = resolve(f_vds);
            c.rules_file = rules_file;
            c.datasets = datasets;
            apmine::cmd_validate_dataset(c);
        } else if (replay->parsed()) {
            auto c = resolve(f_replay);
            c.scripts = scripts;
            apmine::cmd_replay(c);
        } else if (report->parsed()) {
            apmine::cmd_report(resolve(f_report));
        }
    } catch (const apmine::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
