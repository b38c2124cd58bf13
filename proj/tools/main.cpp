#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "prtransx/checkpoint.hpp"
#include "prtransx/config.hpp"
#include "prtransx/evaluator.hpp"
#include "prtransx/io.hpp"
#include "prtransx/kg.hpp"
#include "prtransx/loss.hpp"
#include "prtransx/sampler.hpp"
#include "prtransx/synth.hpp"
#include "prtransx/trainer.hpp"

namespace fs = std::filesystem;
using namespace prtransx;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissingInput = 3;
constexpr int kExitSchema = 4;
constexpr int kExitResolution = 5;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    int workers = 1;
};

RunConfig load_run_config(const CommonArgs& args) {
    RunConfig config;
    if (!args.config_path.empty()) config = parse_config_file(args.config_path);
    return config;
}

void write_config_echo(const fs::path& out_dir, const std::string& command, const RunConfig& config) {
    std::ofstream out(out_dir / (command + "_config.txt"), std::ios::binary);
    out << dump_config(config);
}

void ensure_out_dir(const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw MissingInputError("cannot create output directory " + out_dir + ": " + ec.message());
}

struct Corpus {
    EntityCatalog catalog;
    DiseaseHierarchy hierarchy;
    std::vector<ProbTriplet> triplets;
    std::vector<TripletGroup> filtered_groups;
    DataSplit split;
    int top_k = 0;
};

// The shared train/eval input set: entity table, hierarchy, triplets, split.
Corpus load_corpus(const fs::path& out_dir) {
    require_file(out_dir / "entities.tsv", "the gen command");
    require_file(out_dir / "hierarchy.tsv", "the gen command");
    require_file(out_dir / "triplets.tsv", "the extract command");
    require_file(out_dir / "split.json", "the split command");
    Corpus corpus;
    corpus.catalog = read_entities_tsv(out_dir / "entities.tsv");
    corpus.hierarchy = read_hierarchy_tsv(out_dir / "hierarchy.tsv");
    corpus.triplets = read_triplets_tsv(out_dir / "triplets.tsv");
    validate_triplets(corpus.triplets, corpus.catalog, standard_relations());
    auto [split, top_k] = read_split_json(out_dir / "split.json");
    corpus.split = std::move(split);
    corpus.top_k = top_k;
    corpus.filtered_groups = top_k_filter(build_groups(corpus.triplets), corpus.top_k);
    return corpus;
}

int cmd_gen(const CommonArgs& args) {
    RunConfig config = load_run_config(args);
    if (args.seed) config.world.seed = *args.seed;
    ensure_out_dir(args.out_dir);
    const fs::path out_dir(args.out_dir);

    const World world = generate_world(config.world);
    const auto visits = sample_visits(world, config.visits, config.world.seed, args.workers);

    write_config_echo(out_dir, "gen", config);
    write_world_json(out_dir / "world.json", world);
    write_entities_tsv(out_dir / "entities.tsv", world.catalog);
    write_hierarchy_tsv(out_dir / "hierarchy.tsv", world.hierarchy);
    write_visits_tsv(out_dir / "visits.tsv", visits);
    std::cout << "generated " << world.catalog.size() << " entities, "
              << world.hierarchy.edge_count() << " hierarchy edges, " << visits.size()
              << " visits into " << args.out_dir << "\n";
    return 0;
}

int cmd_extract(const CommonArgs& args) {
    RunConfig config = load_run_config(args);
    ensure_out_dir(args.out_dir);
    const fs::path out_dir(args.out_dir);
    require_file(out_dir / "entities.tsv", "the gen command");
    require_file(out_dir / "hierarchy.tsv", "the gen command");
    require_file(out_dir / "visits.tsv", "the gen command");

    const EntityCatalog catalog = read_entities_tsv(out_dir / "entities.tsv");
    const DiseaseHierarchy hierarchy = read_hierarchy_tsv(out_dir / "hierarchy.tsv");
    validate_hierarchy(hierarchy, catalog);
    const auto visits = read_visits_tsv(out_dir / "visits.tsv");

    const auto triplets = extract_triplets(visits, catalog, hierarchy);
    write_config_echo(out_dir, "extract", config);
    write_triplets_tsv(out_dir / "triplets.tsv", triplets);
    std::cout << "extracted " << triplets.size() << " triplets from " << visits.size()
              << " visits\n";
    return 0;
}

int cmd_split(const CommonArgs& args) {
    RunConfig config = load_run_config(args);
    if (args.seed) config.split_seed = *args.seed;
    ensure_out_dir(args.out_dir);
    const fs::path out_dir(args.out_dir);
    require_file(out_dir / "triplets.tsv", "the extract command");

    const auto triplets = read_triplets_tsv(out_dir / "triplets.tsv");
    const auto groups = top_k_filter(build_groups(triplets), config.top_k);
    const DataSplit split =
        split_groups(groups, standard_relations(), config.test_fraction, config.split_seed,
                     config.stratified);
    write_config_echo(out_dir, "split", config);
    write_split_json(out_dir / "split.json", split, config.top_k);
    std::cout << "split " << groups.size() << " groups: " << split.train_groups.size()
              << " train, " << split.test_groups.size() << " test\n";
    return 0;
}

void dump_negatives_tsv(const fs::path& path, const TrainData& data, const TrainConfig& config) {
    const BernoulliStats stats =
        compute_bernoulli_stats(data.train_triplets, static_cast<int>(data.relations->size()));
    SamplerContext context{stats, *data.catalog, *data.relations, data.positive_filter,
                           *data.hierarchy, config.max_sampling_retries};
    Rng rng(derive_seed(config.seed, 0xDEB06ULL));
    std::ofstream out(path, std::ios::binary);
    out << "h\tr\tt\tneg_h\tneg_t\treplaced_head\n";
    for (const ProbTriplet& positive : data.train_triplets) {
        const NegativePair pair = sample_negative(positive, context, rng);
        out << positive.h << '\t' << positive.r << '\t' << positive.t << '\t' << pair.neg_h << '\t'
            << pair.neg_t << '\t' << (pair.replaced_head ? 1 : 0) << '\n';
    }
}

int cmd_train(const CommonArgs& args, const std::string& model, const std::string& objective,
              const std::string& checkpoint_arg, const std::string& dump_negatives) {
    RunConfig config = load_run_config(args);
    if (!model.empty()) config.train.kind.variant = model_variant_from_string(model);
    if (!objective.empty()) config.train.objective = objective_from_string(objective);
    if (args.seed) config.train.seed = *args.seed;
    config.train.workers = args.workers;

    ensure_out_dir(args.out_dir);
    const fs::path out_dir(args.out_dir);
    const Corpus corpus = load_corpus(out_dir);

    auto train_triplets = select_triplets(corpus.triplets, corpus.filtered_groups,
                                          corpus.split.train_groups);
    auto test_triplets = select_triplets(corpus.triplets, corpus.filtered_groups,
                                         corpus.split.test_groups);
    if (!config.train.filter_with_test) test_triplets.clear();
    const TrainData data =
        make_train_data(corpus.catalog, standard_relations(), corpus.hierarchy,
                        std::move(train_triplets), std::move(test_triplets), config.train.hyper);

    if (!dump_negatives.empty()) dump_negatives_tsv(dump_negatives, data, config.train);

    const fs::path checkpoint_path =
        checkpoint_arg.empty() ? out_dir / "model.ckpt" : fs::path(checkpoint_arg);
    const std::string config_json = train_config_to_json(config.train);
    EpochCallback on_epoch;
    if (config.train.checkpoint_every > 0) {
        on_epoch = [&](int epoch, const ModelParams& params, const EpochStats&) {
            if ((epoch + 1) % config.train.checkpoint_every == 0) {
                save_checkpoint(params, config_json, checkpoint_path);
            }
        };
    }

    const TrainResult result = train(data, config.train, on_epoch);
    write_config_echo(out_dir, "train", config);
    save_checkpoint(result.params, config_json, checkpoint_path);

    std::ofstream log(out_dir / "train_log.tsv", std::ios::binary);
    for (std::size_t epoch = 0; epoch < result.report.epochs.size(); ++epoch) {
        const EpochStats& stats = result.report.epochs[epoch];
        char line[128];
        std::snprintf(line, sizeof(line), "%zu\t%.17g\t%.6f\n", epoch, stats.mean_pair_loss,
                      stats.seconds);
        log << line;
    }

    ordered_json report;
    report["epochs"] = ordered_json::array();
    for (const EpochStats& stats : result.report.epochs) {
        report["epochs"].push_back({{"mean_loss", stats.mean_pair_loss}, {"seconds", stats.seconds}});
    }
    report["wall_seconds"] = result.report.wall_seconds;
    char checksum[32];
    std::snprintf(checksum, sizeof(checksum), "%016llx",
                  static_cast<unsigned long long>(result.report.param_checksum));
    report["param_checksum"] = checksum;
    report["config"] = ordered_json::parse(result.report.config_json);
    std::ofstream report_out(out_dir / "train_report.json", std::ios::binary);
    report_out << report.dump(2) << '\n';

    std::cout << "trained " << to_string(config.train.kind.variant) << "/"
              << to_string(config.train.objective) << " for " << config.train.epochs
              << " epochs; final mean pair loss "
              << (result.report.epochs.empty() ? 0.0 : result.report.epochs.back().mean_pair_loss)
              << "; checkpoint " << checkpoint_path.string() << "\n";
    return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint_arg, bool dump_rankings) {
    RunConfig config = load_run_config(args);
    ensure_out_dir(args.out_dir);
    const fs::path out_dir(args.out_dir);
    const fs::path checkpoint_path =
        checkpoint_arg.empty() ? out_dir / "model.ckpt" : fs::path(checkpoint_arg);
    require_file(checkpoint_path, "the train command");
    require_file(out_dir / "world.json", "the gen command");

    const Corpus corpus = load_corpus(out_dir);
    const LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    const World world = read_world_json(out_dir / "world.json");

    const auto labels = derive_ground_truth(world, config.thresholds);
    const GroundTruthIndex truth(labels);
    config.eval.lambda = config.train.hyper.lambda;
    if (!loaded.config_json.empty()) {
        config.eval.lambda = train_config_from_json(loaded.config_json).hyper.lambda;
    }

    std::vector<RankingResult> rankings;
    const EvalReport report =
        evaluate(loaded.params, corpus.catalog, standard_relations(), corpus.split.test_groups,
                 truth, config.eval, args.workers, dump_rankings ? &rankings : nullptr);
    write_config_echo(out_dir, "eval", config);
    write_eval_report_json(out_dir / "eval_report.json", report);
    if (dump_rankings) write_rankings_tsv(out_dir / "rankings.tsv", rankings);

    std::cout << "evaluated " << report.overall.groups_evaluated << " groups ("
              << report.overall.groups_skipped << " skipped): hits@10 "
              << report.overall.hits_at_10 << ", mean rank " << report.overall.mean_rank
              << ", ndcg@10 " << report.overall.ndcg_at_10 << "\n";
    return 0;
}

int resolve_entity(const EntityCatalog& catalog, const std::string& token) {
    try {
        std::size_t consumed = 0;
        const int id = std::stoi(token, &consumed);
        if (consumed == token.size() && catalog.contains(id)) return id;
    } catch (const std::exception&) {
    }
    const auto by_code = catalog.find_code(token);
    if (by_code) return *by_code;
    throw ResolutionError("cannot resolve entity '" + token + "'");
}

int resolve_relation(const std::string& token) {
    for (const Relation& relation : standard_relations()) {
        if (relation.name == token || std::to_string(relation.id) == token) return relation.id;
    }
    throw ResolutionError("cannot resolve relation '" + token + "'");
}

int cmd_predict(const CommonArgs& args, const std::string& checkpoint_arg, const std::string& h,
                const std::string& r, const std::string& t) {
    const fs::path out_dir(args.out_dir);
    const fs::path checkpoint_path =
        checkpoint_arg.empty() ? out_dir / "model.ckpt" : fs::path(checkpoint_arg);
    require_file(checkpoint_path, "the train command");
    require_file(out_dir / "entities.tsv", "the gen command");

    const LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    const EntityCatalog catalog = read_entities_tsv(out_dir / "entities.tsv");
    double lambda = 10.0;
    if (!loaded.config_json.empty()) {
        lambda = train_config_from_json(loaded.config_json).hyper.lambda;
    }

    const int head = resolve_entity(catalog, h);
    const int relation = resolve_relation(r);
    const int tail = resolve_entity(catalog, t);
    const double s = score(loaded.params, head, relation, tail);
    const double p = infer_probability(loaded.params, head, relation, tail, lambda);
    std::printf("score=%.17g probability=%.17g\n", s, p);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probabilistic knowledge-graph embedding pipeline"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string model, objective, checkpoint, dump_negatives, pred_h, pred_r, pred_t;
    bool dump_rankings = false;

    auto add_common = [&common](CLI::App* cmd, bool with_seed = true, bool with_workers = true) {
        cmd->add_option("--config", common.config_path, "Config file (flat dotted keys)");
        cmd->add_option("--out", common.out_dir, "Artifact directory")->capture_default_str();
        if (with_seed) cmd->add_option("--seed", common.seed, "Override the stage seed");
        if (with_workers) cmd->add_option("--workers", common.workers, "Worker threads");
    };

    CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic world and visit records");
    add_common(gen);
    CLI::App* extract = app.add_subcommand("extract", "Extract probabilistic triplets from visits");
    add_common(extract, /*with_seed=*/false, /*with_workers=*/false);
    CLI::App* split = app.add_subcommand("split", "Group, filter and split triplets");
    add_common(split, /*with_seed=*/true, /*with_workers=*/false);
    CLI::App* train_cmd = app.add_subcommand("train", "Train an embedding model");
    add_common(train_cmd);
    train_cmd->add_option("--model", model, "transE|transH|transR|transD|transSparseShare|transSparseSeparate");
    train_cmd->add_option("--objective", objective, "margin|probabilistic");
    train_cmd->add_option("--checkpoint", checkpoint, "Checkpoint output path");
    train_cmd->add_option("--dump-negatives", dump_negatives, "Audit TSV of sampled negatives");
    CLI::App* eval_cmd = app.add_subcommand("eval", "Run link-prediction evaluation");
    add_common(eval_cmd, /*with_seed=*/false);
    eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint path");
    eval_cmd->add_flag("--dump-rankings", dump_rankings, "Also write rankings.tsv");
    CLI::App* predict = app.add_subcommand("predict", "Score one triplet and print its probability");
    add_common(predict, /*with_seed=*/false, /*with_workers=*/false);
    predict->add_option("--checkpoint", checkpoint, "Checkpoint path");
    predict->add_option("--h", pred_h, "Head entity id or code")->required();
    predict->add_option("--r", pred_r, "Relation id or name")->required();
    predict->add_option("--t", pred_t, "Tail entity id or code")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(common);
        if (extract->parsed()) return cmd_extract(common);
        if (split->parsed()) return cmd_split(common);
        if (train_cmd->parsed()) return cmd_train(common, model, objective, checkpoint, dump_negatives);
        if (eval_cmd->parsed()) return cmd_eval(common, checkpoint, dump_rankings);
        if (predict->parsed()) return cmd_predict(common, checkpoint, pred_h, pred_r, pred_t);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const MissingInputError& e) {
        std::cerr << "missing input: " << e.what() << "\n";
        return kExitMissingInput;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const ResolutionError& e) {
        std::cerr << "resolution error: " << e.what() << "\n";
        return kExitResolution;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
