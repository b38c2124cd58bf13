#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "prtransx/model.hpp"
#include "prtransx/types.hpp"

namespace prtransx {

struct RankedTail {
    int tail = -1;
    double score = 0.0;
    double probability = 0.0;  // phi(score, lambda)
};

// Full candidate ranking for one (h, r) group: ascending score, ties broken
// by ascending entity id.
struct RankingResult {
    int h = -1;
    int r = -1;
    std::vector<RankedTail> ranked;
};

RankingResult rank_tails(const ModelParams& params, int h, int r, std::span<const int> candidates,
                         double lambda);

// Relevance lookup: labels[(h, r)][tail] -> relevance in {1, 2, 3}.
class GroundTruthIndex {
public:
    GroundTruthIndex() = default;
    explicit GroundTruthIndex(std::span<const GroundTruthLabel> labels);
    const std::map<int, int>* find(GroupKey key) const;

private:
    std::map<GroupKey, std::map<int, int>> by_group_;
};

struct MetricOptions {
    int k = 10;
    double lambda = 10.0;
    // Remove other ground-truth tails ranked above a truth before taking its
    // rank (the classical "filtered" protocol). Off by default.
    bool filtered = false;
};

// Fraction of (group, ground-truth tail) pairs ranked within the top k.
// Groups without labels are skipped (callers count them via evaluate()).
double hits_at_k(std::span<const RankingResult> rankings, const GroundTruthIndex& truth, int k,
                 bool filtered = false);

// Mean rank over all (group, ground-truth tail) pairs.
double mean_rank(std::span<const RankingResult> rankings, const GroundTruthIndex& truth,
                 bool filtered = false);

// Graded NDCG at cutoff k with gain 2^rel - 1 and discount log2(i + 1),
// averaged over groups; groups with zero IDCG are skipped.
double ndcg_at_k(std::span<const RankingResult> rankings, const GroundTruthIndex& truth, int k);

struct RelationMetrics {
    double hits_at_10 = 0.0;
    double mean_rank = 0.0;
    double ndcg_at_10 = 0.0;
    std::int64_t groups_evaluated = 0;
    std::int64_t groups_skipped = 0;  // no labels / zero IDCG
    std::int64_t truth_pairs = 0;
};

struct EvalReport {
    RelationMetrics overall;
    std::map<int, RelationMetrics> per_relation;
    int candidate_counts[kEntityTypeCount] = {};
    std::string config_json;  // resolved evaluation options echo
};

// Rank every test group against all entities of the relation's tail type and
// aggregate the three metrics per relation and overall. Pure read of params;
// groups may be scored by multiple workers.
EvalReport evaluate(const ModelParams& params, const EntityCatalog& catalog,
                    std::span<const Relation> relations, std::span<const GroupKey> test_groups,
                    const GroundTruthIndex& truth, const MetricOptions& options, int workers = 1,
                    std::vector<RankingResult>* rankings_out = nullptr);

// phi(score(h, r, t), lambda).
double infer_probability(const ModelParams& params, int h, int r, int t, double lambda);

void write_eval_report_json(const std::filesystem::path& path, const EvalReport& report);

// rankings.tsv: `h<TAB>r<TAB>rank<TAB>tail<TAB>score<TAB>probability`.
void write_rankings_tsv(const std::filesystem::path& path, std::span<const RankingResult> rankings);

}  // namespace prtransx
