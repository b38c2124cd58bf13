#include "prtransx/types.hpp"

#include <algorithm>
#include <array>

namespace prtransx {

namespace {
constexpr std::array<std::string_view, kEntityTypeCount> kTypeNames = {
    "disease", "symptom", "medicine", "operation", "laboratory", "examination",
};
}  // namespace

std::string_view to_string(EntityType type) {
    return kTypeNames[static_cast<std::size_t>(type)];
}

EntityType entity_type_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
        if (kTypeNames[i] == name) return static_cast<EntityType>(i);
    }
    throw SchemaError("unknown entity type: '" + std::string(name) + "'");
}

const std::vector<Relation>& standard_relations() {
    static const std::vector<Relation> kRelations = {
        {kDiseaseToMedicine, "disease_to_medicine", EntityType::disease, EntityType::medicine, false},
        {kDiseaseToSymptom, "disease_to_symptom", EntityType::disease, EntityType::symptom, false},
        {kDiseaseToOperation, "disease_to_operation", EntityType::disease, EntityType::operation, false},
        {kDiseaseToLaboratory, "disease_to_laboratory", EntityType::disease, EntityType::laboratory, false},
        {kDiseaseToExamination, "disease_to_examination", EntityType::disease, EntityType::examination, false},
        {kUpperToLowerDisease, "upper_disease_to_lower_disease", EntityType::disease, EntityType::disease, true},
    };
    return kRelations;
}

std::optional<int> relation_for_tail_type(EntityType tail_type) {
    switch (tail_type) {
        case EntityType::medicine: return kDiseaseToMedicine;
        case EntityType::symptom: return kDiseaseToSymptom;
        case EntityType::operation: return kDiseaseToOperation;
        case EntityType::laboratory: return kDiseaseToLaboratory;
        case EntityType::examination: return kDiseaseToExamination;
        case EntityType::disease: return std::nullopt;
    }
    return std::nullopt;
}

void DiseaseHierarchy::add_edge(int child, int parent) {
    if (child == parent) throw SchemaError("hierarchy edge with child == parent: " + std::to_string(child));
    auto [it, inserted] = parent_.emplace(child, parent);
    if (!inserted) {
        throw SchemaError("disease " + std::to_string(child) + " already has a parent");
    }
    // Reject cycles early: walking up from the new parent must not reach child.
    int cursor = parent;
    while (true) {
        if (cursor == child) {
            parent_.erase(it);
            throw SchemaError("hierarchy cycle through disease " + std::to_string(child));
        }
        auto up = parent_.find(cursor);
        if (up == parent_.end()) break;
        cursor = up->second;
    }
    edges_.emplace_back(child, parent);
    node_marks_[child] = 1;
    node_marks_[parent] = 1;
}

std::optional<int> DiseaseHierarchy::parent(int disease) const {
    auto it = parent_.find(disease);
    if (it == parent_.end()) return std::nullopt;
    return it->second;
}

bool DiseaseHierarchy::contains(int disease) const {
    return node_marks_.count(disease) > 0;
}

int DiseaseHierarchy::root_of(int disease) const {
    int cursor = disease;
    auto it = parent_.find(cursor);
    while (it != parent_.end()) {
        cursor = it->second;
        it = parent_.find(cursor);
    }
    return cursor;
}

std::vector<int> DiseaseHierarchy::ancestors(int disease) const {
    std::vector<int> chain;
    auto it = parent_.find(disease);
    while (it != parent_.end()) {
        chain.push_back(it->second);
        it = parent_.find(it->second);
    }
    return chain;
}

EntityCatalog::EntityCatalog(std::vector<Entity> entities) : entities_(std::move(entities)) {
    by_type_.resize(kEntityTypeCount);
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        const Entity& e = entities_[i];
        if (e.id != static_cast<int>(i)) {
            throw SchemaError("entity ids must be dense from 0; got id " + std::to_string(e.id) +
                              " at position " + std::to_string(i));
        }
        by_type_[static_cast<std::size_t>(e.type)].push_back(e.id);
        auto [it, inserted] = by_code_.emplace(e.code, e.id);
        if (!inserted) throw SchemaError("duplicate entity code: '" + e.code + "'");
    }
}

const Entity& EntityCatalog::at(int id) const {
    if (!contains(id)) throw ResolutionError("unknown entity id: " + std::to_string(id));
    return entities_[static_cast<std::size_t>(id)];
}

const std::vector<int>& EntityCatalog::of_type(EntityType type) const {
    return by_type_.at(static_cast<std::size_t>(type));
}

std::optional<int> EntityCatalog::find_code(std::string_view code) const {
    auto it = by_code_.find(std::string(code));
    if (it == by_code_.end()) return std::nullopt;
    return it->second;
}

bool DataSplit::in_test(GroupKey key) const {
    return std::binary_search(test_groups.begin(), test_groups.end(), key);
}

}  // namespace prtransx
