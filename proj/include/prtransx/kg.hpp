#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "prtransx/types.hpp"

namespace prtransx {

// Partition triplets into (h, r) groups. Tails come out sorted by descending
// p, ties by ascending tail id; groups sorted by (h, r). A repeated (h, r, t)
// key is rejected with the conflicting key reported.
std::vector<TripletGroup> build_groups(std::span<const ProbTriplet> triplets);

// Keep the k highest-probability tails of a group (all of them when the
// group is smaller). Requires tails already sorted by descending p.
TripletGroup top_k_filter(const TripletGroup& group, int k);
std::vector<TripletGroup> top_k_filter(std::vector<TripletGroup> groups, int k);

// Move `test_fraction` of the groups of every non-prior relation into the
// test set (floor per relation when stratified, floor over the pool
// otherwise). Prior-knowledge groups always train. Deterministic given seed.
DataSplit split_groups(std::span<const TripletGroup> groups, std::span<const Relation> relations,
                       double test_fraction, std::uint64_t seed, bool stratified = true);

// True iff the two diseases belong to the same tree of the hierarchy forest
// (share an ancestor, or one is an ancestor of the other, or d1 == d2).
bool same_class(int d1, int d2, const DiseaseHierarchy& hierarchy, const EntityCatalog& catalog);

// Flatten groups back to triplets (p only; counts are not reconstructed).
std::vector<TailEntry> group_tails_of(const std::vector<TripletGroup>& groups, GroupKey key);

// The original triplets (counts preserved) that survived the top-k filter
// and whose group key is in `keys`. Output keeps the input order.
std::vector<ProbTriplet> select_triplets(std::span<const ProbTriplet> triplets,
                                         std::span<const TripletGroup> filtered_groups,
                                         std::span<const GroupKey> keys);

// Checks entity-type validity of every triplet against the relation schema
// and the p/count consistency invariants; throws SchemaError on violation.
void validate_triplets(std::span<const ProbTriplet> triplets, const EntityCatalog& catalog,
                       std::span<const Relation> relations);

// Checks that child codes extend parent codes and that the forest is rooted.
void validate_hierarchy(const DiseaseHierarchy& hierarchy, const EntityCatalog& catalog);

}  // namespace prtransx
