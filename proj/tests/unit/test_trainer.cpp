#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "prtransx/checkpoint.hpp"
#include "prtransx/kg.hpp"
#include "prtransx/synth.hpp"
#include "prtransx/trainer.hpp"

using namespace prtransx;

namespace {

// Toy domain: two unrelated diseases and two symptoms under a single
// disease_to_symptom-style relation.
struct Toy {
    EntityCatalog catalog{std::vector<Entity>{
        {0, EntityType::disease, "A00"},
        {1, EntityType::disease, "B11"},
        {2, EntityType::symptom, "SYM0"},
        {3, EntityType::symptom, "SYM1"},
    }};
    std::vector<Relation> relations{
        {0, "disease_to_symptom", EntityType::disease, EntityType::symptom, false}};
    DiseaseHierarchy hierarchy;

    Hyperparams hyper() const {
        Hyperparams h;
        h.alpha = {1.0};
        h.beta = {10.0};
        return h;
    }

    TrainData data(double p) const {
        ProbTriplet triplet;
        triplet.h = 0;
        triplet.r = 0;
        triplet.t = 2;
        triplet.p = p;
        triplet.cooccurrence_count = 0;
        triplet.head_count = 1;
        return make_train_data(catalog, relations, hierarchy, {triplet}, {}, hyper());
    }

    TrainConfig config(Objective objective) const {
        TrainConfig config;
        config.objective = objective;
        config.kind = {ModelVariant::TransE, DistanceNorm::L1};
        config.dim_entity = config.dim_relation = 8;
        config.hyper = hyper();
        config.seed = 3;
        return config;
    }
};

WorldConfig tiny_world_config() {
    WorldConfig config;
    config.diseases = {2, 2, 2};
    config.entity_counts = {0, 15, 15, 15, 15, 15};
    for (auto& range : config.fan_out) range = {3, 5};
    config.seed = 14;
    return config;
}

struct SmallCorpus {
    World world = generate_world(tiny_world_config());
    std::vector<ProbTriplet> train;

    SmallCorpus() {
        const auto visits = sample_visits(world, 3000, 4);
        const auto triplets = extract_triplets(visits, world.catalog, world.hierarchy);
        const auto groups = top_k_filter(build_groups(triplets), 20);
        const auto split = split_groups(groups, world.relations, 0.2, 6);
        train = select_triplets(triplets, groups, split.train_groups);
    }

    TrainData data(const Hyperparams& hyper) const {
        return make_train_data(world.catalog, world.relations, world.hierarchy, train, {}, hyper);
    }
};

}  // namespace

TEST_CASE("margin objective drives a satisfiable toy loss to zero") {
    const Toy toy;
    auto config = toy.config(Objective::margin);
    config.epochs = 200;
    config.learning_rate = 0.05;
    const auto result = train(toy.data(0.8), config);
    CHECK(result.report.epochs.back().mean_pair_loss == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("probabilistic objective converges to the mapped target score") {
    const Toy toy;
    auto config = toy.config(Objective::probabilistic);
    config.epochs = 3000;
    config.learning_rate = 1e-4;
    const double p = std::exp(-1.0);
    const auto result = train(toy.data(p), config);
    const double s = score(result.params, 0, 0, 2);
    CHECK(std::abs(s - 0.1) < 1e-2);  // phi_inv(e^-1, 10) = 0.1
}

TEST_CASE("identical seeds give bit-identical parameters") {
    const SmallCorpus corpus;
    TrainConfig config;
    config.kind = {ModelVariant::TransH, DistanceNorm::L1};
    config.epochs = 5;
    config.seed = 12;
    const auto a = train(corpus.data(config.hyper), config);
    const auto b = train(corpus.data(config.hyper), config);
    CHECK(a.params.entity_emb == b.params.entity_emb);
    CHECK(a.params.relation_emb == b.params.relation_emb);
    CHECK(a.report.param_checksum == b.report.param_checksum);
}

TEST_CASE("probabilistic objective with zero weights is the degenerate zero loss") {
    const SmallCorpus corpus;
    TrainConfig config;
    config.epochs = 2;
    config.hyper.alpha.assign(6, 0.0);
    config.hyper.beta.assign(6, 0.0);
    const auto result = train(corpus.data(config.hyper), config);
    for (const auto& stats : result.report.epochs) CHECK(stats.mean_pair_loss == 0.0);
}

TEST_CASE("probabilistic objective with reference weights starts strictly positive") {
    const SmallCorpus corpus;
    TrainConfig config;
    config.epochs = 1;
    const auto result = train(corpus.data(config.hyper), config);
    CHECK(result.report.epochs.front().mean_pair_loss > 0.0);
}

TEST_CASE("entity norms and normals satisfy constraints after every epoch") {
    const SmallCorpus corpus;
    for (ModelVariant variant : {ModelVariant::TransE, ModelVariant::TransH, ModelVariant::TransR,
                                 ModelVariant::TransD, ModelVariant::TranSparseShare,
                                 ModelVariant::TranSparseSeparate}) {
        TrainConfig config;
        config.kind = {variant, DistanceNorm::L1};
        config.epochs = 3;
        config.seed = 9;
        const auto result = train(corpus.data(config.hyper), config);
        for (int e = 0; e < result.params.entity_count; ++e) {
            double n = 0.0;
            for (double x : result.params.entity(e)) n += x * x;
            CHECK(std::sqrt(n) <= 1.0 + 1e-9);
        }
        if (variant == ModelVariant::TransH) {
            for (int r = 0; r < result.params.relation_count; ++r) {
                double n = 0.0;
                for (double x : result.params.normal(r)) n += x * x;
                CHECK(std::abs(std::sqrt(n) - 1.0) <= 1e-9);
            }
        }
    }
}

TEST_CASE("epoch losses descend on the small corpus") {
    const SmallCorpus corpus;
    for (Objective objective : {Objective::margin, Objective::probabilistic}) {
        TrainConfig config;
        config.objective = objective;
        config.epochs = 60;
        config.learning_rate = 0.01;
        config.seed = 10;
        const auto result = train(corpus.data(config.hyper), config);
        const auto& epochs = result.report.epochs;
        const std::size_t tenth = std::max<std::size_t>(1, epochs.size() / 10);
        double head = 0.0, tail = 0.0;
        for (std::size_t i = 0; i < tenth; ++i) head += epochs[i].mean_pair_loss;
        for (std::size_t i = epochs.size() - tenth; i < epochs.size(); ++i) {
            tail += epochs[i].mean_pair_loss;
        }
        CHECK(tail / static_cast<double>(tenth) <= head / static_cast<double>(tenth));
    }
}

TEST_CASE("checkpoints round-trip bit-exactly for every variant") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "prtransx_ckpt_test";
    fs::create_directories(dir);
    const SmallCorpus corpus;
    for (ModelVariant variant : {ModelVariant::TransE, ModelVariant::TransH, ModelVariant::TransR,
                                 ModelVariant::TransD, ModelVariant::TranSparseShare,
                                 ModelVariant::TranSparseSeparate}) {
        TrainConfig config;
        config.kind = {variant, DistanceNorm::L1};
        config.epochs = 2;
        const auto result = train(corpus.data(config.hyper), config);
        const fs::path path = dir / ("model_" + std::string(to_string(variant)) + ".ckpt");
        save_checkpoint(result.params, train_config_to_json(config), path);
        const auto loaded = load_checkpoint(path);
        CHECK(loaded.params.entity_emb == result.params.entity_emb);
        CHECK(loaded.params.relation_emb == result.params.relation_emb);
        CHECK(loaded.params.hyperplane_normals == result.params.hyperplane_normals);
        CHECK(loaded.params.proj_head == result.params.proj_head);
        CHECK(loaded.params.proj_tail == result.params.proj_tail);
        CHECK(loaded.params.entity_proj == result.params.entity_proj);
        CHECK(loaded.params.relation_proj == result.params.relation_proj);
        CHECK(loaded.params.theta == result.params.theta);
        CHECK(loaded.params.checksum() == result.params.checksum());
        const auto round_config = train_config_from_json(loaded.config_json);
        CHECK(round_config.kind.variant == variant);
    }
    fs::remove_all(dir);
}

TEST_CASE("corrupt and mismatched checkpoints are rejected") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "prtransx_ckpt_err_test";
    fs::create_directories(dir);
    const Toy toy;
    auto config = toy.config(Objective::margin);
    config.epochs = 1;
    const auto result = train(toy.data(0.5), config);
    const fs::path path = dir / "model.ckpt";
    save_checkpoint(result.params, train_config_to_json(config), path);

    SUBCASE("truncation") {
        std::string bytes;
        {
            std::ifstream in(path, std::ios::binary);
            bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        }
        const fs::path cut = dir / "cut.ckpt";
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        CHECK_THROWS_AS(static_cast<void>(load_checkpoint(cut)), CheckpointError);
    }
    SUBCASE("variant mismatch") {
        CHECK_THROWS_WITH_AS(static_cast<void>(load_checkpoint(path, ModelVariant::TransR)),
                             doctest::Contains("mismatch"), CheckpointError);
    }
    SUBCASE("bad magic") {
        const fs::path bad = dir / "bad.ckpt";
        std::ofstream out(bad, std::ios::binary);
        out << "NOTPRTX garbage";
        out.close();
        CHECK_THROWS_AS(static_cast<void>(load_checkpoint(bad)), CheckpointError);
    }
    fs::remove_all(dir);
}

TEST_CASE("resuming from explicit initial parameters") {
    const SmallCorpus corpus;
    TrainConfig config;
    config.epochs = 2;
    const auto first = train(corpus.data(config.hyper), config);
    const auto resumed = train(corpus.data(config.hyper), config, {}, &first.params);
    CHECK(resumed.params.entity_emb != first.params.entity_emb);  // training moved on
}

TEST_CASE("trainer validates its configuration") {
    const Toy toy;
    auto config = toy.config(Objective::margin);
    config.epochs = 0;
    CHECK_THROWS_AS(static_cast<void>(train(toy.data(0.5), config)), ConfigError);
    config = toy.config(Objective::margin);
    config.learning_rate = -1.0;
    CHECK_THROWS_AS(static_cast<void>(train(toy.data(0.5), config)), ConfigError);
}

TEST_CASE("train config JSON round-trips") {
    TrainConfig config;
    config.objective = Objective::margin;
    config.kind = {ModelVariant::TranSparseSeparate, DistanceNorm::L2};
    config.epochs = 17;
    config.hyper.alpha = {1, 2, 3, 4, 5, 6};
    const auto round = train_config_from_json(train_config_to_json(config));
    CHECK(round.objective == Objective::margin);
    CHECK(round.kind.variant == ModelVariant::TranSparseSeparate);
    CHECK(round.kind.norm == DistanceNorm::L2);
    CHECK(round.epochs == 17);
    CHECK(round.hyper.alpha == config.hyper.alpha);
}
