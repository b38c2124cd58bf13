#include "prtransx/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "prtransx/io.hpp"
#include "prtransx/loss.hpp"

namespace prtransx {

namespace {

using ordered_json = nlohmann::ordered_json;

double dcg_gain(int relevance) {
    return std::pow(2.0, relevance) - 1.0;
}

double dcg_discount(std::size_t position_1based) {
    return std::log2(static_cast<double>(position_1based) + 1.0);
}

// 1-based ranks of every labeled tail in the ranking; filtered mode removes
// other truths ranked above each truth.
std::vector<std::pair<int, std::int64_t>> truth_ranks(const RankingResult& ranking,
                                                      const std::map<int, int>& labels,
                                                      bool filtered) {
    std::vector<std::pair<int, std::int64_t>> out;  // (tail, rank)
    std::vector<std::int64_t> raw_ranks;
    for (std::size_t i = 0; i < ranking.ranked.size(); ++i) {
        if (labels.count(ranking.ranked[i].tail)) {
            out.emplace_back(ranking.ranked[i].tail, static_cast<std::int64_t>(i + 1));
            raw_ranks.push_back(static_cast<std::int64_t>(i + 1));
        }
    }
    if (filtered) {
        for (auto& [tail, rank] : out) {
            std::int64_t above = 0;
            for (std::int64_t other : raw_ranks) {
                if (other < rank) ++above;
            }
            rank -= above;
        }
    }
    return out;
}

double group_ndcg(const RankingResult& ranking, const std::map<int, int>& labels, int k) {
    double dcg = 0.0;
    const std::size_t cutoff = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.ranked.size());
    for (std::size_t i = 0; i < cutoff; ++i) {
        auto it = labels.find(ranking.ranked[i].tail);
        if (it != labels.end()) dcg += dcg_gain(it->second) / dcg_discount(i + 1);
    }
    // Ideal ordering of the candidates' relevances.
    std::vector<int> relevances;
    for (const RankedTail& tail : ranking.ranked) {
        auto it = labels.find(tail.tail);
        if (it != labels.end()) relevances.push_back(it->second);
    }
    std::sort(relevances.begin(), relevances.end(), std::greater<int>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(static_cast<std::size_t>(k), relevances.size()); ++i) {
        idcg += dcg_gain(relevances[i]) / dcg_discount(i + 1);
    }
    if (idcg <= 0.0) return -1.0;  // caller skips the group
    return dcg / idcg;
}

}  // namespace

RankingResult rank_tails(const ModelParams& params, int h, int r, std::span<const int> candidates,
                         double lambda) {
    if (candidates.empty()) throw ConfigError("rank_tails requires a nonempty candidate set");
    RankingResult result;
    result.h = h;
    result.r = r;
    result.ranked.reserve(candidates.size());
    for (int candidate : candidates) {
        RankedTail entry;
        entry.tail = candidate;
        entry.score = score(params, h, r, candidate);
        entry.probability = phi(entry.score, lambda);
        result.ranked.push_back(entry);
    }
    std::sort(result.ranked.begin(), result.ranked.end(), [](const RankedTail& a, const RankedTail& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.tail < b.tail;
    });
    return result;
}

GroundTruthIndex::GroundTruthIndex(std::span<const GroundTruthLabel> labels) {
    for (const GroundTruthLabel& label : labels) {
        by_group_[{label.h, label.r}][label.tail] = label.relevance;
    }
}

const std::map<int, int>* GroundTruthIndex::find(GroupKey key) const {
    auto it = by_group_.find(key);
    if (it == by_group_.end()) return nullptr;
    return &it->second;
}

double hits_at_k(std::span<const RankingResult> rankings, const GroundTruthIndex& truth, int k,
                 bool filtered) {
    std::int64_t hits = 0, pairs = 0;
    for (const RankingResult& ranking : rankings) {
        const auto* labels = truth.find({ranking.h, ranking.r});
        if (labels == nullptr || labels->empty()) continue;
        for (const auto& [tail, rank] : truth_ranks(ranking, *labels, filtered)) {
            ++pairs;
            if (rank <= k) ++hits;
        }
    }
    if (pairs == 0) return 0.0;
    return static_cast<double>(hits) / static_cast<double>(pairs);
}

double mean_rank(std::span<const RankingResult> rankings, const GroundTruthIndex& truth,
                 bool filtered) {
    std::int64_t pairs = 0;
    double rank_sum = 0.0;
    for (const RankingResult& ranking : rankings) {
        const auto* labels = truth.find({ranking.h, ranking.r});
        if (labels == nullptr || labels->empty()) continue;
        for (const auto& [tail, rank] : truth_ranks(ranking, *labels, filtered)) {
            ++pairs;
            rank_sum += static_cast<double>(rank);
        }
    }
    if (pairs == 0) return 0.0;
    return rank_sum / static_cast<double>(pairs);
}

double ndcg_at_k(std::span<const RankingResult> rankings, const GroundTruthIndex& truth, int k) {
    std::int64_t groups = 0;
    double sum = 0.0;
    for (const RankingResult& ranking : rankings) {
        const auto* labels = truth.find({ranking.h, ranking.r});
        if (labels == nullptr || labels->empty()) continue;
        const double value = group_ndcg(ranking, *labels, k);
        if (value < 0.0) continue;
        ++groups;
        sum += value;
    }
    if (groups == 0) return 0.0;
    return sum / static_cast<double>(groups);
}

EvalReport evaluate(const ModelParams& params, const EntityCatalog& catalog,
                    std::span<const Relation> relations, std::span<const GroupKey> test_groups,
                    const GroundTruthIndex& truth, const MetricOptions& options, int workers,
                    std::vector<RankingResult>* rankings_out) {
    struct GroupResult {
        int relation = -1;
        bool skipped = false;
        std::int64_t pairs = 0;
        std::int64_t hits = 0;
        double rank_sum = 0.0;
        double ndcg = 0.0;
    };

    std::vector<GroupKey> keys(test_groups.begin(), test_groups.end());
    std::sort(keys.begin(), keys.end());
    std::vector<GroupResult> results(keys.size());
    std::vector<RankingResult> rankings(rankings_out != nullptr ? keys.size() : 0);

    auto process = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const GroupKey key = keys[i];
            GroupResult& out = results[i];
            out.relation = key.r;
            const Relation& relation = relations[static_cast<std::size_t>(key.r)];
            const std::vector<int>& candidates = catalog.of_type(relation.tail_type);
            RankingResult ranking = rank_tails(params, key.h, key.r, candidates, options.lambda);
            const auto* labels = truth.find(key);
            if (labels == nullptr || labels->empty()) {
                out.skipped = true;
            } else {
                const double ndcg = group_ndcg(ranking, *labels, options.k);
                if (ndcg < 0.0) {
                    out.skipped = true;
                } else {
                    out.ndcg = ndcg;
                    for (const auto& [tail, rank] : truth_ranks(ranking, *labels, options.filtered)) {
                        ++out.pairs;
                        out.rank_sum += static_cast<double>(rank);
                        if (rank <= options.k) ++out.hits;
                    }
                }
            }
            if (rankings_out != nullptr) rankings[i] = std::move(ranking);
        }
    };

    workers = std::max(1, workers);
    if (workers == 1 || keys.size() < 2) {
        process(0, keys.size());
    } else {
        std::vector<std::thread> threads;
        const std::size_t chunk = (keys.size() + static_cast<std::size_t>(workers) - 1) /
                                  static_cast<std::size_t>(workers);
        for (int w = 0; w < workers; ++w) {
            const std::size_t begin = static_cast<std::size_t>(w) * chunk;
            const std::size_t end = std::min(keys.size(), begin + chunk);
            if (begin >= end) break;
            threads.emplace_back(process, begin, end);
        }
        for (std::thread& thread : threads) thread.join();
    }

    EvalReport report;
    struct Accumulator {
        std::int64_t pairs = 0, hits = 0, groups = 0, skipped = 0;
        double rank_sum = 0.0, ndcg_sum = 0.0;
    };
    std::map<int, Accumulator> per_relation;
    Accumulator overall;
    for (const GroupResult& result : results) {
        Accumulator& acc = per_relation[result.relation];
        for (Accumulator* a : {&acc, &overall}) {
            if (result.skipped) {
                ++a->skipped;
            } else {
                ++a->groups;
                a->pairs += result.pairs;
                a->hits += result.hits;
                a->rank_sum += result.rank_sum;
                a->ndcg_sum += result.ndcg;
            }
        }
    }
    auto to_metrics = [](const Accumulator& acc) {
        RelationMetrics metrics;
        metrics.groups_evaluated = acc.groups;
        metrics.groups_skipped = acc.skipped;
        metrics.truth_pairs = acc.pairs;
        if (acc.pairs > 0) {
            metrics.hits_at_10 = static_cast<double>(acc.hits) / static_cast<double>(acc.pairs);
            metrics.mean_rank = acc.rank_sum / static_cast<double>(acc.pairs);
        }
        if (acc.groups > 0) metrics.ndcg_at_10 = acc.ndcg_sum / static_cast<double>(acc.groups);
        return metrics;
    };
    report.overall = to_metrics(overall);
    for (const auto& [relation, acc] : per_relation) {
        report.per_relation[relation] = to_metrics(acc);
    }
    for (int i = 0; i < kEntityTypeCount; ++i) {
        report.candidate_counts[i] = static_cast<int>(catalog.of_type(static_cast<EntityType>(i)).size());
    }

    ordered_json echo;
    echo["k"] = options.k;
    echo["lambda"] = options.lambda;
    echo["filtered"] = options.filtered;
    report.config_json = echo.dump();

    if (rankings_out != nullptr) *rankings_out = std::move(rankings);
    return report;
}

double infer_probability(const ModelParams& params, int h, int r, int t, double lambda) {
    return phi(score(params, h, r, t), lambda);
}

void write_eval_report_json(const std::filesystem::path& path, const EvalReport& report) {
    auto metrics_to_json = [](const RelationMetrics& metrics) {
        ordered_json doc;
        doc["hits_at_10"] = metrics.hits_at_10;
        doc["mean_rank"] = metrics.mean_rank;
        doc["ndcg_at_10"] = metrics.ndcg_at_10;
        doc["groups_evaluated"] = metrics.groups_evaluated;
        doc["groups_skipped"] = metrics.groups_skipped;
        doc["truth_pairs"] = metrics.truth_pairs;
        return doc;
    };
    ordered_json doc;
    doc["overall"] = metrics_to_json(report.overall);
    ordered_json per_relation = ordered_json::object();
    const auto& relations = standard_relations();
    for (const auto& [relation, metrics] : report.per_relation) {
        const std::string key = relation >= 0 && relation < static_cast<int>(relations.size())
                                    ? relations[static_cast<std::size_t>(relation)].name
                                    : std::to_string(relation);
        per_relation[key] = metrics_to_json(metrics);
    }
    doc["per_relation"] = per_relation;
    ordered_json counts = ordered_json::object();
    for (int i = 0; i < kEntityTypeCount; ++i) {
        counts[std::string(to_string(static_cast<EntityType>(i)))] = report.candidate_counts[i];
    }
    doc["candidate_counts"] = counts;
    try {
        doc["config"] = ordered_json::parse(report.config_json);
    } catch (const nlohmann::json::exception&) {
        doc["config"] = report.config_json;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingInputError("cannot open for writing: " + path.string());
    out << doc.dump(2) << '\n';
}

void write_rankings_tsv(const std::filesystem::path& path, std::span<const RankingResult> rankings) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingInputError("cannot open for writing: " + path.string());
    for (const RankingResult& ranking : rankings) {
        for (std::size_t i = 0; i < ranking.ranked.size(); ++i) {
            const RankedTail& tail = ranking.ranked[i];
            out << ranking.h << '\t' << ranking.r << '\t' << (i + 1) << '\t' << tail.tail << '\t'
                << format_probability(tail.score) << '\t' << format_probability(tail.probability)
                << '\n';
        }
    }
}

}  // namespace prtransx
