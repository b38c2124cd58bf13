#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "prtransx/types.hpp"

namespace prtransx {

struct DiseaseLevelCounts {
    int chapters = 4;
    int categories_per_chapter = 3;
    int subcategories_per_category = 2;
};

struct FanOutRange {
    int min_tails = 10;
    int max_tails = 30;
};

// Long-tail conditional probabilities: bounded Pareto on [p_min, p_max].
struct PlantedDistribution {
    double p_min = 0.01;
    double p_max = 1.0;
    double shape = 0.5;
};

struct WorldConfig {
    DiseaseLevelCounts diseases;
    std::array<int, kEntityTypeCount> entity_counts = {0, 100, 100, 100, 100, 100};  // diseases derived
    std::array<FanOutRange, 5> fan_out = {};  // per statistical relation, schema order
    PlantedDistribution planted;
    std::uint64_t seed = 42;

    int leaf_disease_count() const;
    int total_disease_count() const;
    void validate() const;
};

// Ground-truth conditional probabilities planted at leaf diseases.
// profile[(leaf, relation)] lists (tail, p) with p in (0, 1].
struct PlantedProfile {
    std::map<std::pair<int, int>, std::vector<TailEntry>> tails;
};

struct Observation {
    EntityType type;
    int entity = -1;
};

struct VisitRecord {
    std::int64_t visit_id = 0;
    int primary_disease = -1;  // always a leaf
    std::vector<Observation> observed;  // sorted by (type, entity)
};

struct World {
    WorldConfig config;
    EntityCatalog catalog;
    std::vector<Relation> relations;  // the standard schema
    DiseaseHierarchy hierarchy;
    PlantedProfile profile;
    std::vector<int> leaf_diseases;  // ascending ids
};

// Build the entity tables, the three-level disease forest with
// prefix-consistent codes, and the planted conditional profiles.
// Deterministic given config.seed.
World generate_world(const WorldConfig& config);

// Draw visits: uniform leaf primary, then each planted tail independently
// with its planted probability. Per-visit derived seeds make the output
// independent of worker count.
std::vector<VisitRecord> sample_visits(const World& world, std::int64_t n_visits,
                                       std::uint64_t seed, int workers = 1);

// Count co-occurrences, crediting each observation to the primary disease
// and every ancestor; p = N_(h,r,t) / N_h where a visit holds h when its
// primary is h or a descendant. Hierarchy edges come out as
// upper_disease_to_lower_disease triplets with p = 1. Output sorted (h,r,t).
std::vector<ProbTriplet> extract_triplets(std::span<const VisitRecord> visits,
                                          const EntityCatalog& catalog,
                                          const DiseaseHierarchy& hierarchy);

struct RelevanceThresholds {
    double strongly = 0.5;  // relevance 3 at planted p >= strongly
    double related = 0.2;   // relevance 2
    double weakly = 0.05;   // relevance 1
};

// Map planted probabilities to graded relevance labels.
std::vector<GroundTruthLabel> derive_ground_truth(const World& world,
                                                  const RelevanceThresholds& thresholds);

// Planted probability of (h, r, t). For leaf heads this is the planted
// profile entry; for ancestors it is the mean over descendant leaves
// (uniform primaries make that the exact conditional); hierarchy edges are 1.
// nullopt when the triplet has probability zero under the planted world.
std::optional<double> planted_probability(const World& world, int h, int r, int t);

// visits.tsv: `visit_id<TAB>primary_disease_id<TAB>type:id;type:id;...`.
void write_visits_tsv(const std::filesystem::path& path, std::span<const VisitRecord> visits);
std::vector<VisitRecord> read_visits_tsv(const std::filesystem::path& path);

// world.json: config echo, entity table, hierarchy, planted profiles.
void write_world_json(const std::filesystem::path& path, const World& world);
World read_world_json(const std::filesystem::path& path);

}  // namespace prtransx
