#include "prtransx/sampler.hpp"

#include <map>
#include <set>
#include <string>

#include "prtransx/kg.hpp"

namespace prtransx {

namespace {

std::uint64_t pack_key(int h, int r, int t) {
    return (static_cast<std::uint64_t>(h) << 40) | (static_cast<std::uint64_t>(r) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(t));
}

}  // namespace

BernoulliStats compute_bernoulli_stats(std::span<const ProbTriplet> train_triplets,
                                       int relation_count) {
    if (train_triplets.empty()) throw ConfigError("bernoulli stats require a nonempty training set");
    std::vector<std::set<int>> heads(static_cast<std::size_t>(relation_count));
    std::vector<std::set<int>> tails(static_cast<std::size_t>(relation_count));
    std::vector<std::int64_t> counts(static_cast<std::size_t>(relation_count), 0);
    for (const ProbTriplet& triplet : train_triplets) {
        const auto r = static_cast<std::size_t>(triplet.r);
        heads[r].insert(triplet.h);
        tails[r].insert(triplet.t);
        ++counts[r];
    }
    BernoulliStats stats;
    stats.per_relation.resize(static_cast<std::size_t>(relation_count));
    for (std::size_t r = 0; r < stats.per_relation.size(); ++r) {
        auto& rel = stats.per_relation[r];
        rel.triplet_count = counts[r];
        if (counts[r] == 0) continue;
        rel.tph = static_cast<double>(counts[r]) / static_cast<double>(heads[r].size());
        rel.hpt = static_cast<double>(counts[r]) / static_cast<double>(tails[r].size());
        rel.replace_head_prob = rel.tph / (rel.tph + rel.hpt);
    }
    return stats;
}

PositiveIndex::PositiveIndex(std::span<const ProbTriplet> triplets) {
    keys_.reserve(triplets.size() * 2);
    for (const ProbTriplet& triplet : triplets) insert(triplet.h, triplet.r, triplet.t);
}

void PositiveIndex::insert(int h, int r, int t) {
    keys_.insert(pack_key(h, r, t));
}

bool PositiveIndex::contains(int h, int r, int t) const {
    return keys_.count(pack_key(h, r, t)) > 0;
}

NegativePair sample_negative(const ProbTriplet& positive, const SamplerContext& context, Rng& rng) {
    const Relation& relation = context.relations.at(static_cast<std::size_t>(positive.r));
    const auto& stats = context.stats.per_relation.at(static_cast<std::size_t>(positive.r));

    const bool replace_head = uniform_01(rng) < stats.replace_head_prob;
    const EntityType pool_type = replace_head ? relation.head_type : relation.tail_type;
    const std::vector<int>& pool = context.catalog.of_type(pool_type);
    if (pool.empty()) {
        throw SamplingError("no candidate entities of type " + std::string(to_string(pool_type)));
    }

    // Class exclusion applies to the corrupted side whenever that side holds
    // diseases: always for heads, and for tails of the disease-to-disease
    // relation.
    const bool class_excluded_side = pool_type == EntityType::disease;
    const int original = replace_head ? positive.h : positive.t;

    for (int attempt = 0; attempt < context.max_retries; ++attempt) {
        const int candidate = pool[static_cast<std::size_t>(
            uniform_index(rng, static_cast<std::int64_t>(pool.size())))];
        if (candidate == original) continue;
        const int h = replace_head ? candidate : positive.h;
        const int t = replace_head ? positive.t : candidate;
        if (context.positives.contains(h, positive.r, t)) continue;
        if (class_excluded_side &&
            same_class(candidate, original, context.hierarchy, context.catalog)) {
            continue;
        }
        NegativePair pair;
        pair.positive = positive;
        pair.neg_h = h;
        pair.neg_t = t;
        pair.replaced_head = replace_head;
        return pair;
    }
    throw SamplingError("candidate pool exhausted after " + std::to_string(context.max_retries) +
                        " retries for positive (h=" + std::to_string(positive.h) +
                        ", r=" + relation.name + ", t=" + std::to_string(positive.t) + ")");
}

}  // namespace prtransx
