#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "prtransx/errors.hpp"

namespace prtransx {

enum class EntityType : std::uint8_t {
    disease = 0,
    symptom,
    medicine,
    operation,
    laboratory,
    examination,
};

inline constexpr int kEntityTypeCount = 6;

std::string_view to_string(EntityType type);
EntityType entity_type_from_string(std::string_view name);

struct Entity {
    int id = -1;
    EntityType type = EntityType::disease;
    std::string code;  // diseases carry hierarchical ICD-style codes, e.g. "C16.902"
};

struct Relation {
    int id = -1;
    std::string name;
    EntityType head_type = EntityType::disease;
    EntityType tail_type = EntityType::disease;
    bool is_prior_knowledge = false;
};

// Relation ids of the fixed schema, in the canonical order that the
// per-relation loss weights (alpha/beta) are given in.
inline constexpr int kDiseaseToMedicine = 0;
inline constexpr int kDiseaseToSymptom = 1;
inline constexpr int kDiseaseToOperation = 2;
inline constexpr int kDiseaseToLaboratory = 3;
inline constexpr int kDiseaseToExamination = 4;
inline constexpr int kUpperToLowerDisease = 5;
inline constexpr int kRelationCount = 6;

// The six-relation schema: heads are always diseases, tails per relation,
// upper_disease_to_lower_disease is prior knowledge.
const std::vector<Relation>& standard_relations();

// Statistical relation id for observations of a given tail type; nullopt for
// disease (hierarchy edges are emitted separately, not observed per visit).
std::optional<int> relation_for_tail_type(EntityType tail_type);

// A (head, relation, tail) fact with its empirical conditional probability
// p = cooccurrence_count / head_count.
struct ProbTriplet {
    int h = -1;
    int r = -1;
    int t = -1;
    double p = 0.0;
    std::int64_t cooccurrence_count = 0;
    std::int64_t head_count = 0;
};

struct GroupKey {
    int h = -1;
    int r = -1;
    auto operator<=>(const GroupKey&) const = default;
};

struct TailEntry {
    int tail = -1;
    double p = 0.0;
    bool operator==(const TailEntry&) const = default;
};

// All triplets sharing one (head, relation); tails ordered by descending p,
// ties by ascending tail id.
struct TripletGroup {
    int h = -1;
    int r = -1;
    std::vector<TailEntry> tails;

    GroupKey key() const { return {h, r}; }
};

struct GroundTruthLabel {
    int h = -1;
    int r = -1;
    int tail = -1;
    int relevance = 0;  // 3 = strongly related, 2 = related, 1 = weakly related
};

// Parent links of the disease forest. Roots have no entry.
class DiseaseHierarchy {
public:
    void add_edge(int child, int parent);

    std::optional<int> parent(int disease) const;
    bool contains(int disease) const;
    int root_of(int disease) const;
    // Ancestors of `disease`, nearest first; excludes `disease` itself.
    std::vector<int> ancestors(int disease) const;
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    std::size_t edge_count() const { return edges_.size(); }

private:
    std::unordered_map<int, int> parent_;
    std::unordered_map<int, int> node_marks_;  // node -> 1 (membership)
    std::vector<std::pair<int, int>> edges_;   // (child, parent) in insertion order
};

// Entity table with id, type and code lookups. Ids must be dense from 0.
class EntityCatalog {
public:
    EntityCatalog() = default;
    explicit EntityCatalog(std::vector<Entity> entities);

    const Entity& at(int id) const;
    bool contains(int id) const { return id >= 0 && id < static_cast<int>(entities_.size()); }
    int size() const { return static_cast<int>(entities_.size()); }
    const std::vector<Entity>& entities() const { return entities_; }
    const std::vector<int>& of_type(EntityType type) const;
    std::optional<int> find_code(std::string_view code) const;

private:
    std::vector<Entity> entities_;
    std::vector<std::vector<int>> by_type_;
    std::unordered_map<std::string, int> by_code_;
};

struct DataSplit {
    std::vector<GroupKey> train_groups;  // sorted by (h, r)
    std::vector<GroupKey> test_groups;   // sorted by (h, r)
    double test_fraction = 0.0;
    std::uint64_t seed = 0;
    bool stratified = true;

    bool in_test(GroupKey key) const;
};

}  // namespace prtransx
