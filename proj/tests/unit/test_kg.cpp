#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "prtransx/io.hpp"
#include "prtransx/kg.hpp"
#include "prtransx/rng.hpp"

using namespace prtransx;

namespace {

ProbTriplet make(int h, int r, int t, double p) {
    ProbTriplet triplet;
    triplet.h = h;
    triplet.r = r;
    triplet.t = t;
    triplet.p = p;
    triplet.cooccurrence_count = static_cast<std::int64_t>(p * 1000);
    triplet.head_count = 1000;
    return triplet;
}

// A miniature catalog: diseases 0..3 (two chapters with one child each),
// symptoms 4..6, medicines 7..8.
EntityCatalog mini_catalog() {
    std::vector<Entity> entities = {
        {0, EntityType::disease, "A01"},     {1, EntityType::disease, "A01.1"},
        {2, EntityType::disease, "B02"},     {3, EntityType::disease, "B02.4"},
        {4, EntityType::symptom, "SYM0"},    {5, EntityType::symptom, "SYM1"},
        {6, EntityType::symptom, "SYM2"},    {7, EntityType::medicine, "MED0"},
        {8, EntityType::medicine, "MED1"},
    };
    return EntityCatalog(std::move(entities));
}

DiseaseHierarchy mini_hierarchy() {
    DiseaseHierarchy hierarchy;
    hierarchy.add_edge(1, 0);
    hierarchy.add_edge(3, 2);
    return hierarchy;
}

}  // namespace

TEST_CASE("build_groups partitions by (h, r)") {
    std::vector<ProbTriplet> triplets = {
        make(5, 1, 10, 0.4), make(5, 1, 11, 0.9), make(5, 1, 12, 0.2), make(5, 2, 10, 0.5),
    };
    const auto groups = build_groups(triplets);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].h == 5);
    CHECK(groups[0].r == 1);
    CHECK(groups[0].tails.size() == 3);
    CHECK(groups[1].tails.size() == 1);
    // Tails in descending p.
    CHECK(groups[0].tails[0].tail == 11);
    CHECK(groups[0].tails[1].tail == 10);
    CHECK(groups[0].tails[2].tail == 12);
}

TEST_CASE("build_groups of empty input is empty") {
    CHECK(build_groups(std::vector<ProbTriplet>{}).empty());
}

TEST_CASE("build_groups rejects conflicting duplicates") {
    std::vector<ProbTriplet> triplets = {make(1, 0, 2, 0.4), make(1, 0, 2, 0.5)};
    CHECK_THROWS_WITH_AS(static_cast<void>(build_groups(triplets)),
                         doctest::Contains("h=1"), DuplicateTripletError);
}

TEST_CASE("grouping is a partition") {
    Rng rng(7);
    std::vector<ProbTriplet> triplets;
    std::set<std::tuple<int, int, int>> seen;
    while (triplets.size() < 300) {
        const int h = static_cast<int>(uniform_index(rng, 20));
        const int r = static_cast<int>(uniform_index(rng, 4));
        const int t = static_cast<int>(uniform_index(rng, 30));
        if (!seen.insert({h, r, t}).second) continue;
        triplets.push_back(make(h, r, t, uniform_01(rng) * 0.99 + 0.01));
    }
    const auto groups = build_groups(triplets);
    std::size_t total = 0;
    std::set<std::tuple<int, int, int>> flattened;
    for (const auto& group : groups) {
        total += group.tails.size();
        for (const auto& entry : group.tails) flattened.insert({group.h, group.r, entry.tail});
    }
    CHECK(total == triplets.size());
    CHECK(flattened == seen);
}

TEST_CASE("top_k_filter keeps the k most probable tails") {
    TripletGroup group;
    group.h = 1;
    group.r = 0;
    for (int i = 0; i < 25; ++i) group.tails.push_back({i, 1.0 - i * 0.03});
    const auto filtered = top_k_filter(group, 20);
    CHECK(filtered.tails.size() == 20);
    CHECK(filtered.tails.front().tail == 0);
    CHECK(filtered.tails.back().tail == 19);

    TripletGroup small;
    small.h = 1;
    small.r = 0;
    for (int i = 0; i < 5; ++i) small.tails.push_back({i, 0.5});
    CHECK(top_k_filter(small, 20).tails.size() == 5);
}

TEST_CASE("top_k_filter tie at the cut prefers smaller ids") {
    TripletGroup group;
    group.h = 0;
    group.r = 0;
    std::vector<ProbTriplet> triplets = {make(0, 0, 7, 0.5), make(0, 0, 9, 0.3), make(0, 0, 3, 0.3),
                                         make(0, 0, 5, 0.1)};
    const auto groups = build_groups(triplets);
    const auto filtered = top_k_filter(groups[0], 3);
    REQUIRE(filtered.tails.size() == 3);
    CHECK(filtered.tails[0].tail == 7);
    CHECK(filtered.tails[1].tail == 3);  // tie at 0.3 broken by ascending id
    CHECK(filtered.tails[2].tail == 9);
    // No discarded tail has p above any kept tail's p.
    for (const auto& kept : filtered.tails) CHECK(kept.p >= 0.1);
}

TEST_CASE("split_groups honors fraction, priors, and determinism") {
    std::vector<TripletGroup> groups;
    for (int h = 0; h < 10; ++h) {
        TripletGroup group;
        group.h = h;
        group.r = kDiseaseToSymptom;
        group.tails = {{100 + h, 0.5}};
        groups.push_back(group);
    }
    for (int h = 0; h < 4; ++h) {
        TripletGroup group;
        group.h = h;
        group.r = kUpperToLowerDisease;
        group.tails = {{h + 1, 1.0}};
        groups.push_back(group);
    }
    const auto split = split_groups(groups, standard_relations(), 0.2, 99);
    int test_symptom = 0;
    for (const auto& key : split.test_groups) {
        CHECK(key.r != kUpperToLowerDisease);
        if (key.r == kDiseaseToSymptom) ++test_symptom;
    }
    CHECK(test_symptom == 2);  // floor(0.2 * 10)
    const auto again = split_groups(groups, standard_relations(), 0.2, 99);
    CHECK(split.train_groups == again.train_groups);
    CHECK(split.test_groups == again.test_groups);
}

TEST_CASE("split invariants hold over many seeds") {
    Rng rng(3);
    std::vector<TripletGroup> groups;
    for (int h = 0; h < 30; ++h) {
        for (int r = 0; r < kRelationCount; ++r) {
            if (uniform_01(rng) < 0.5) continue;
            TripletGroup group;
            group.h = h;
            group.r = r;
            group.tails = {{200 + h, 0.7}};
            groups.push_back(group);
        }
    }
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto split = split_groups(groups, standard_relations(), 0.25, seed);
        std::set<GroupKey> train(split.train_groups.begin(), split.train_groups.end());
        for (const auto& key : split.test_groups) {
            CHECK(train.count(key) == 0);
            CHECK_FALSE(standard_relations()[static_cast<std::size_t>(key.r)].is_prior_knowledge);
        }
        CHECK(split.train_groups.size() + split.test_groups.size() == groups.size());
    }
}

TEST_CASE("split_groups validates the fraction") {
    CHECK_THROWS_AS(static_cast<void>(split_groups({}, standard_relations(), 1.0, 1)), ConfigError);
    CHECK_THROWS_AS(static_cast<void>(split_groups({}, standard_relations(), -0.1, 1)), ConfigError);
}

TEST_CASE("same_class follows the hierarchy forest") {
    const auto catalog = mini_catalog();
    const auto hierarchy = mini_hierarchy();
    CHECK(same_class(1, 0, hierarchy, catalog));   // child vs parent
    CHECK(same_class(0, 1, hierarchy, catalog));   // symmetric
    CHECK(same_class(2, 2, hierarchy, catalog));   // reflexive
    CHECK_FALSE(same_class(0, 2, hierarchy, catalog));  // different chapters
    CHECK_FALSE(same_class(1, 3, hierarchy, catalog));
    CHECK_THROWS_AS(static_cast<void>(same_class(0, 4, hierarchy, catalog)), ResolutionError);
}

TEST_CASE("select_triplets keeps survivors of filter and split") {
    std::vector<ProbTriplet> triplets = {
        make(0, 1, 4, 0.9), make(0, 1, 5, 0.5), make(0, 1, 6, 0.2), make(2, 1, 4, 0.8),
    };
    auto groups = top_k_filter(build_groups(triplets), 2);
    const std::vector<GroupKey> keys = {{0, 1}};
    const auto selected = select_triplets(triplets, groups, keys);
    REQUIRE(selected.size() == 2);
    CHECK(selected[0].t == 4);
    CHECK(selected[1].t == 5);
    CHECK(selected[0].cooccurrence_count == 900);  // counts preserved
}

TEST_CASE("entity/triplet/hierarchy/split files round-trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "prtransx_kg_io_test";
    fs::create_directories(dir);

    const auto catalog = mini_catalog();
    write_entities_tsv(dir / "entities.tsv", catalog);
    const auto catalog2 = read_entities_tsv(dir / "entities.tsv");
    REQUIRE(catalog2.size() == catalog.size());
    CHECK(catalog2.at(3).code == "B02.4");
    CHECK(catalog2.at(4).type == EntityType::symptom);

    std::vector<ProbTriplet> triplets = {make(0, 1, 4, 1.0 / 3.0), make(2, 1, 5, 0.125)};
    triplets[0].cooccurrence_count = 1;
    triplets[0].head_count = 3;
    triplets[1].cooccurrence_count = 1;
    triplets[1].head_count = 8;
    write_triplets_tsv(dir / "triplets.tsv", triplets);
    const auto triplets2 = read_triplets_tsv(dir / "triplets.tsv");
    REQUIRE(triplets2.size() == 2);
    CHECK(triplets2[0].p == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK(triplets2[1].head_count == 8);

    const auto hierarchy = mini_hierarchy();
    write_hierarchy_tsv(dir / "hierarchy.tsv", hierarchy);
    const auto hierarchy2 = read_hierarchy_tsv(dir / "hierarchy.tsv");
    CHECK(hierarchy2.parent(1) == 0);
    CHECK(hierarchy2.parent(3) == 2);
    CHECK_FALSE(hierarchy2.parent(0).has_value());
    CHECK_NOTHROW(validate_hierarchy(hierarchy2, catalog));

    DataSplit split;
    split.train_groups = {{0, 1}, {2, 1}};
    split.test_groups = {{3, 2}};
    split.seed = 42;
    split.test_fraction = 0.2;
    write_split_json(dir / "split.json", split, 20);
    const auto [split2, top_k] = read_split_json(dir / "split.json");
    CHECK(top_k == 20);
    CHECK(split2.seed == 42);
    CHECK(split2.train_groups == split.train_groups);
    CHECK(split2.test_groups == split.test_groups);

    fs::remove_all(dir);
}

TEST_CASE("validate_triplets rejects type mismatches") {
    const auto catalog = mini_catalog();
    std::vector<ProbTriplet> bad = {make(4, kDiseaseToSymptom, 5, 0.5)};  // symptom head
    CHECK_THROWS_AS(validate_triplets(bad, catalog, standard_relations()), SchemaError);
    std::vector<ProbTriplet> wrong_tail = {make(0, kDiseaseToSymptom, 7, 0.5)};  // medicine tail
    CHECK_THROWS_AS(validate_triplets(wrong_tail, catalog, standard_relations()), SchemaError);
    std::vector<ProbTriplet> ok = {make(0, kDiseaseToSymptom, 4, 0.5)};
    CHECK_NOTHROW(validate_triplets(ok, catalog, standard_relations()));
}

TEST_CASE("validate_hierarchy rejects code mismatches") {
    std::vector<Entity> entities = {
        {0, EntityType::disease, "A01"},
        {1, EntityType::disease, "B99.1"},
    };
    const EntityCatalog catalog{std::move(entities)};
    DiseaseHierarchy hierarchy;
    hierarchy.add_edge(1, 0);  // "B99.1" does not extend "A01"
    CHECK_THROWS_AS(validate_hierarchy(hierarchy, catalog), SchemaError);
}

TEST_CASE("hierarchy rejects cycles and double parents") {
    DiseaseHierarchy hierarchy;
    hierarchy.add_edge(1, 0);
    CHECK_THROWS_AS(hierarchy.add_edge(0, 1), SchemaError);
    CHECK_THROWS_AS(hierarchy.add_edge(1, 2), SchemaError);
}
