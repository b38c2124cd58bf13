#pragma once

#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "prtransx/rng.hpp"
#include "prtransx/types.hpp"

namespace prtransx {

// Per-relation head/tail replacement statistics on the training set.
struct BernoulliStats {
    struct RelationStats {
        double tph = 0.0;  // mean distinct tails per head
        double hpt = 0.0;  // mean distinct heads per tail
        double replace_head_prob = 0.5;  // tph / (tph + hpt)
        std::int64_t triplet_count = 0;
    };
    std::vector<RelationStats> per_relation;
};

BernoulliStats compute_bernoulli_stats(std::span<const ProbTriplet> train_triplets,
                                       int relation_count);

// Membership index over known positive triplets ((h, r, t) keys).
class PositiveIndex {
public:
    PositiveIndex() = default;
    explicit PositiveIndex(std::span<const ProbTriplet> triplets);
    void insert(int h, int r, int t);
    bool contains(int h, int r, int t) const;
    std::size_t size() const { return keys_.size(); }

private:
    std::unordered_set<std::uint64_t> keys_;
};

struct NegativePair {
    ProbTriplet positive;
    int neg_h = -1;
    int neg_t = -1;
    bool replaced_head = false;
};

struct SamplerContext {
    const BernoulliStats& stats;
    const EntityCatalog& catalog;
    const std::vector<Relation>& relations;
    const PositiveIndex& positives;  // full positive set used for filtering
    const DiseaseHierarchy& hierarchy;
    int max_retries = 100;
};

// Corrupt head or tail per the Bernoulli statistics. The replacement is
// uniform over entities of the required type, excluding anything that would
// recreate a known positive and, on the head side (and the tail side of the
// disease-to-disease relation), diseases in the same ICD class as the
// original. Throws SamplingError after max_retries rejections.
NegativePair sample_negative(const ProbTriplet& positive, const SamplerContext& context, Rng& rng);

}  // namespace prtransx
