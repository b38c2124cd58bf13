#include "prtransx/kg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "prtransx/rng.hpp"

namespace prtransx {

std::vector<TripletGroup> build_groups(std::span<const ProbTriplet> triplets) {
    std::map<GroupKey, std::map<int, double>> grouped;
    for (const ProbTriplet& triplet : triplets) {
        auto& tails = grouped[{triplet.h, triplet.r}];
        auto [it, inserted] = tails.emplace(triplet.t, triplet.p);
        if (!inserted) {
            throw DuplicateTripletError(
                "duplicate triplet (h=" + std::to_string(triplet.h) + ", r=" + std::to_string(triplet.r) +
                ", t=" + std::to_string(triplet.t) + ") with p=" + std::to_string(it->second) +
                " and p=" + std::to_string(triplet.p));
        }
    }
    std::vector<TripletGroup> groups;
    groups.reserve(grouped.size());
    for (auto& [key, tails] : grouped) {
        TripletGroup group;
        group.h = key.h;
        group.r = key.r;
        group.tails.reserve(tails.size());
        for (const auto& [tail, p] : tails) group.tails.push_back({tail, p});
        std::stable_sort(group.tails.begin(), group.tails.end(), [](const TailEntry& a, const TailEntry& b) {
            if (a.p != b.p) return a.p > b.p;
            return a.tail < b.tail;
        });
        groups.push_back(std::move(group));
    }
    return groups;
}

TripletGroup top_k_filter(const TripletGroup& group, int k) {
    if (k < 1) throw ConfigError("top-k filter requires k >= 1");
    TripletGroup filtered{group.h, group.r, {}};
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), group.tails.size());
    filtered.tails.assign(group.tails.begin(), group.tails.begin() + static_cast<std::ptrdiff_t>(keep));
    return filtered;
}

std::vector<TripletGroup> top_k_filter(std::vector<TripletGroup> groups, int k) {
    for (TripletGroup& group : groups) group = top_k_filter(group, k);
    return groups;
}

DataSplit split_groups(std::span<const TripletGroup> groups, std::span<const Relation> relations,
                       double test_fraction, std::uint64_t seed, bool stratified) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
        throw ConfigError("split.test_fraction must be in [0, 1)");
    }
    DataSplit split;
    split.test_fraction = test_fraction;
    split.seed = seed;
    split.stratified = stratified;

    // Canonical order before shuffling so the outcome depends only on the
    // group multiset and the seed.
    std::vector<GroupKey> keys;
    keys.reserve(groups.size());
    for (const TripletGroup& group : groups) keys.push_back(group.key());
    std::sort(keys.begin(), keys.end());

    auto is_prior = [&](GroupKey key) {
        return relations[static_cast<std::size_t>(key.r)].is_prior_knowledge;
    };

    auto select_test = [&](std::vector<GroupKey>& pool, std::uint64_t stream) {
        Rng rng(derive_seed(seed, 0x5EEDu, stream));
        std::shuffle(pool.begin(), pool.end(), rng);
        const auto n_test = static_cast<std::size_t>(
            std::floor(test_fraction * static_cast<double>(pool.size())));
        for (std::size_t i = 0; i < n_test; ++i) split.test_groups.push_back(pool[i]);
        for (std::size_t i = n_test; i < pool.size(); ++i) split.train_groups.push_back(pool[i]);
    };

    if (stratified) {
        for (const Relation& relation : relations) {
            std::vector<GroupKey> pool;
            for (GroupKey key : keys) {
                if (key.r != relation.id) continue;
                if (relation.is_prior_knowledge) {
                    split.train_groups.push_back(key);
                } else {
                    pool.push_back(key);
                }
            }
            if (!pool.empty()) select_test(pool, static_cast<std::uint64_t>(relation.id));
        }
    } else {
        std::vector<GroupKey> pool;
        for (GroupKey key : keys) {
            if (is_prior(key)) {
                split.train_groups.push_back(key);
            } else {
                pool.push_back(key);
            }
        }
        if (!pool.empty()) select_test(pool, 0xFFFFu);
    }

    std::sort(split.train_groups.begin(), split.train_groups.end());
    std::sort(split.test_groups.begin(), split.test_groups.end());
    return split;
}

bool same_class(int d1, int d2, const DiseaseHierarchy& hierarchy, const EntityCatalog& catalog) {
    for (int d : {d1, d2}) {
        if (catalog.at(d).type != EntityType::disease) {
            throw ResolutionError("same_class: entity " + std::to_string(d) + " is not a disease");
        }
    }
    return hierarchy.root_of(d1) == hierarchy.root_of(d2);
}

std::vector<TailEntry> group_tails_of(const std::vector<TripletGroup>& groups, GroupKey key) {
    for (const TripletGroup& group : groups) {
        if (group.key() == key) return group.tails;
    }
    return {};
}

std::vector<ProbTriplet> select_triplets(std::span<const ProbTriplet> triplets,
                                         std::span<const TripletGroup> filtered_groups,
                                         std::span<const GroupKey> keys) {
    std::vector<GroupKey> sorted_keys(keys.begin(), keys.end());
    std::sort(sorted_keys.begin(), sorted_keys.end());
    auto key_selected = [&](GroupKey key) {
        return std::binary_search(sorted_keys.begin(), sorted_keys.end(), key);
    };

    // (h, r, t) survivors of the top-k filter within the selected groups.
    std::map<GroupKey, std::vector<int>> surviving;
    for (const TripletGroup& group : filtered_groups) {
        if (!key_selected(group.key())) continue;
        auto& tails = surviving[group.key()];
        tails.reserve(group.tails.size());
        for (const TailEntry& entry : group.tails) tails.push_back(entry.tail);
        std::sort(tails.begin(), tails.end());
    }

    std::vector<ProbTriplet> selected;
    for (const ProbTriplet& triplet : triplets) {
        auto it = surviving.find({triplet.h, triplet.r});
        if (it == surviving.end()) continue;
        if (std::binary_search(it->second.begin(), it->second.end(), triplet.t)) {
            selected.push_back(triplet);
        }
    }
    return selected;
}

void validate_triplets(std::span<const ProbTriplet> triplets, const EntityCatalog& catalog,
                       std::span<const Relation> relations) {
    for (const ProbTriplet& triplet : triplets) {
        if (triplet.r < 0 || triplet.r >= static_cast<int>(relations.size())) {
            throw SchemaError("triplet references unknown relation id " + std::to_string(triplet.r));
        }
        const Relation& relation = relations[static_cast<std::size_t>(triplet.r)];
        const Entity& head = catalog.at(triplet.h);
        const Entity& tail = catalog.at(triplet.t);
        auto describe = [&]() {
            return "(h=" + std::to_string(triplet.h) + ", r=" + relation.name +
                   ", t=" + std::to_string(triplet.t) + ")";
        };
        if (head.type != relation.head_type) {
            throw SchemaError("head type mismatch for triplet " + describe());
        }
        if (tail.type != relation.tail_type) {
            throw SchemaError("tail type mismatch for triplet " + describe());
        }
        if (!(triplet.p > 0.0 && triplet.p <= 1.0)) {
            throw SchemaError("probability out of (0,1] for triplet " + describe());
        }
        if (triplet.head_count <= 0 || triplet.cooccurrence_count < 0) {
            throw SchemaError("invalid counts for triplet " + describe());
        }
        if (triplet.cooccurrence_count > 0) {
            const double ratio = static_cast<double>(triplet.cooccurrence_count) /
                                 static_cast<double>(triplet.head_count);
            if (std::abs(ratio - triplet.p) > 1e-9 * std::max(1.0, ratio)) {
                throw SchemaError("p != cooccurrence_count / head_count for triplet " + describe());
            }
        }
    }
}

void validate_hierarchy(const DiseaseHierarchy& hierarchy, const EntityCatalog& catalog) {
    for (const auto& [child, parent] : hierarchy.edges()) {
        const Entity& child_entity = catalog.at(child);
        const Entity& parent_entity = catalog.at(parent);
        if (child_entity.type != EntityType::disease || parent_entity.type != EntityType::disease) {
            throw SchemaError("hierarchy edge between non-disease entities " + std::to_string(child) +
                              " -> " + std::to_string(parent));
        }
        if (child_entity.code.rfind(parent_entity.code, 0) != 0) {
            throw SchemaError("hierarchy code mismatch: child '" + child_entity.code +
                              "' does not extend parent '" + parent_entity.code + "'");
        }
    }
}

}  // namespace prtransx
