#include "prtransx/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

#include "prtransx/rng.hpp"

namespace prtransx {

namespace {

using ordered_json = nlohmann::ordered_json;

using GradKey = std::pair<ParamTable, int>;
using GradMap = std::map<GradKey, std::vector<double>>;

void accumulate(GradMap& into, const ScoreGrad& grad, double scale) {
    if (scale == 0.0) return;
    for (const GradEntry& entry : grad.entries) {
        auto& slot = into[{entry.table, entry.index}];
        if (slot.empty()) slot.assign(entry.grad.size(), 0.0);
        for (std::size_t i = 0; i < entry.grad.size(); ++i) slot[i] += scale * entry.grad[i];
    }
}

struct Touched {
    std::vector<int> entities;
    std::vector<int> relations;
    std::vector<std::pair<int, int>> pairs;  // (relation, entity)

    void note_pair(const ModelParams& params, int h, int r, int t) {
        entities.push_back(h);
        entities.push_back(t);
        relations.push_back(r);
        if (params.uses_matrices() || params.kind.variant == ModelVariant::TransD) {
            pairs.emplace_back(r, h);
            pairs.emplace_back(r, t);
        }
    }
    void finalize() {
        auto dedupe = [](auto& v) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        };
        dedupe(entities);
        dedupe(relations);
        dedupe(pairs);
    }
};

}  // namespace

std::string_view to_string(Objective objective) {
    return objective == Objective::margin ? "margin" : "probabilistic";
}

Objective objective_from_string(std::string_view name) {
    if (name == "margin") return Objective::margin;
    if (name == "probabilistic") return Objective::probabilistic;
    throw ConfigError("unknown objective: '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (negatives_per_positive < 1) throw ConfigError("train.negatives_per_positive must be >= 1");
    if (dim_entity < 1 || dim_relation < 1) throw ConfigError("train dimensions must be >= 1");
    if (!(update_weight_exponent_cap > 0.0)) {
        throw ConfigError("train.update_weight_cap must be > 0");
    }
    if (!(theta_min >= 0.0 && theta_min < 1.0)) throw ConfigError("train.theta_min must be in [0, 1)");
    if (max_sampling_retries < 1) throw ConfigError("train.max_sampling_retries must be >= 1");
    if (workers < 1) throw ConfigError("train.workers must be >= 1");
    if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
}

TrainData make_train_data(const EntityCatalog& catalog, const std::vector<Relation>& relations,
                          const DiseaseHierarchy& hierarchy,
                          std::vector<ProbTriplet> train_triplets,
                          std::vector<ProbTriplet> extra_filter_triplets,
                          const Hyperparams& hyper) {
    TrainData data;
    data.catalog = &catalog;
    data.relations = &relations;
    data.hierarchy = &hierarchy;
    for (ProbTriplet& triplet : train_triplets) {
        triplet.p = clamp_probability(triplet.p, hyper, /*is_negative=*/false);
    }
    data.positive_filter = PositiveIndex(train_triplets);
    for (const ProbTriplet& triplet : extra_filter_triplets) {
        data.positive_filter.insert(triplet.h, triplet.r, triplet.t);
    }
    data.train_triplets = std::move(train_triplets);
    return data;
}

namespace {

ModelParams init_for_training(const TrainData& data, const TrainConfig& config) {
    const int relation_count = static_cast<int>(data.relations->size());
    SparseSpec sparse;
    const SparseSpec* sparse_ptr = nullptr;
    if (config.kind.variant == ModelVariant::TranSparseShare ||
        config.kind.variant == ModelVariant::TranSparseSeparate) {
        sparse.relation_triplet_counts.assign(static_cast<std::size_t>(relation_count), 0);
        for (const ProbTriplet& triplet : data.train_triplets) {
            ++sparse.relation_triplet_counts[static_cast<std::size_t>(triplet.r)];
        }
        sparse.theta_min = config.theta_min;
        sparse_ptr = &sparse;
    }
    return init_params(config.kind, data.catalog->size(), relation_count, config.dim_entity,
                       config.dim_relation, config.seed, sparse_ptr);
}

struct PairTerms {
    double loss = 0.0;      // telemetry value (full loss cap)
    double d_s = 0.0;       // update gradient w.r.t. positive score
    double d_s_neg = 0.0;   // update gradient w.r.t. negative score
};

PairTerms pair_terms(const TrainConfig& config, const Hyperparams& update_hyper,
                     const ProbTriplet& positive, double s, double s_neg) {
    PairTerms terms;
    if (config.objective == Objective::margin) {
        terms.loss = margin_pair_loss(s, s_neg, config.hyper.gamma);
        const PairGrad g = grad_margin(s, s_neg, config.hyper.gamma);
        terms.d_s = g.d_s;
        terms.d_s_neg = g.d_s_neg;
    } else {
        terms.loss = combined_pair_loss(s, s_neg, positive.p, positive.r, config.hyper);
        const PairGrad g =
            grad_combined(s, s_neg, positive.p, positive.r, update_hyper, config.detach_weight);
        terms.d_s = g.d_s;
        terms.d_s_neg = g.d_s_neg;
    }
    return terms;
}

}  // namespace

TrainResult train(const TrainData& data, const TrainConfig& config, const EpochCallback& on_epoch,
                  const ModelParams* initial_params) {
    config.validate();
    const int relation_count = static_cast<int>(data.relations->size());
    config.hyper.validate(static_cast<std::size_t>(relation_count));
    if (data.train_triplets.empty()) throw ConfigError("training set is empty");

    TrainResult result;
    result.params = initial_params != nullptr ? *initial_params : init_for_training(data, config);
    ModelParams& params = result.params;

    // Updates use the tighter weight cap; reported losses use the full one.
    Hyperparams update_hyper = config.hyper;
    update_hyper.weight_exponent_cap =
        std::min(config.hyper.weight_exponent_cap, config.update_weight_exponent_cap);

    const BernoulliStats stats = compute_bernoulli_stats(data.train_triplets, relation_count);
    SamplerContext sampler_context{stats,          *data.catalog, *data.relations,
                                   data.positive_filter, *data.hierarchy,
                                   config.max_sampling_retries};

    std::vector<std::size_t> order(data.train_triplets.size());
    std::iota(order.begin(), order.end(), 0);

    const auto train_start = std::chrono::steady_clock::now();
    result.report.epochs.reserve(static_cast<std::size_t>(config.epochs));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        Rng epoch_rng(derive_seed(config.seed, 0xE90C4ULL, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), epoch_rng);

        double loss_sum = 0.0;
        std::int64_t pair_count = 0;

        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t batch_end =
                std::min(order.size(), batch_start + static_cast<std::size_t>(config.batch_size));
            const int batch_index = static_cast<int>(batch_start / static_cast<std::size_t>(config.batch_size));
            auto batch_fail = [&](const std::string& what) {
                return NonFiniteError("epoch " + std::to_string(epoch) + " batch " +
                                      std::to_string(batch_index) + ": " + what);
            };

            GradMap grads;
            Touched touched;
            std::int64_t batch_pairs = 0;

            auto process_pair = [&](const ProbTriplet& positive, Rng& rng, GradMap& into,
                                    double& local_loss_sum) {
                const NegativePair pair = sample_negative(positive, sampler_context, rng);
                const double s = score(params, positive.h, positive.r, positive.t);
                const double s_neg = score(params, pair.neg_h, positive.r, pair.neg_t);
                const PairTerms terms = pair_terms(config, update_hyper, positive, s, s_neg);
                if (!std::isfinite(terms.loss)) {
                    throw batch_fail("non-finite pair loss for positive (h=" +
                                     std::to_string(positive.h) + ", r=" + std::to_string(positive.r) +
                                     ", t=" + std::to_string(positive.t) + ")");
                }
                local_loss_sum += terms.loss;
                if (terms.d_s != 0.0) {
                    accumulate(into, grad_score(params, positive.h, positive.r, positive.t), terms.d_s);
                }
                if (terms.d_s_neg != 0.0) {
                    accumulate(into, grad_score(params, pair.neg_h, positive.r, pair.neg_t),
                               terms.d_s_neg);
                }
                touched.note_pair(params, positive.h, positive.r, positive.t);
                touched.note_pair(params, pair.neg_h, positive.r, pair.neg_t);
            };

            if (config.workers <= 1) {
                for (std::size_t i = batch_start; i < batch_end; ++i) {
                    const ProbTriplet& positive = data.train_triplets[order[i]];
                    for (int n = 0; n < config.negatives_per_positive; ++n) {
                        process_pair(positive, epoch_rng, grads, loss_sum);
                        ++batch_pairs;
                    }
                }
            } else {
                // Hogwild-style mode: workers build local gradients over
                // disjoint slices, then apply without synchronization. Not
                // bit-reproducible; kept out of determinism guarantees.
                const int workers = config.workers;
                std::vector<GradMap> local_grads(static_cast<std::size_t>(workers));
                std::vector<double> local_loss(static_cast<std::size_t>(workers), 0.0);
                std::vector<std::int64_t> local_pairs(static_cast<std::size_t>(workers), 0);
                std::vector<std::thread> threads;
                const std::size_t span = batch_end - batch_start;
                const std::size_t chunk = (span + static_cast<std::size_t>(workers) - 1) /
                                          static_cast<std::size_t>(workers);
                std::mutex touched_mutex;
                for (int w = 0; w < workers; ++w) {
                    const std::size_t begin = batch_start + static_cast<std::size_t>(w) * chunk;
                    const std::size_t end = std::min(batch_end, begin + chunk);
                    if (begin >= end) break;
                    threads.emplace_back([&, w, begin, end]() {
                        Rng rng(derive_seed(config.seed, 0xC0FE + static_cast<std::uint64_t>(epoch),
                                            static_cast<std::uint64_t>(w)));
                        for (std::size_t i = begin; i < end; ++i) {
                            const ProbTriplet& positive = data.train_triplets[order[i]];
                            for (int n = 0; n < config.negatives_per_positive; ++n) {
                                const NegativePair pair = sample_negative(positive, sampler_context, rng);
                                const double s = score(params, positive.h, positive.r, positive.t);
                                const double s_neg = score(params, pair.neg_h, positive.r, pair.neg_t);
                                const PairTerms terms =
                                    pair_terms(config, update_hyper, positive, s, s_neg);
                                local_loss[static_cast<std::size_t>(w)] += terms.loss;
                                ++local_pairs[static_cast<std::size_t>(w)];
                                if (terms.d_s != 0.0) {
                                    accumulate(local_grads[static_cast<std::size_t>(w)],
                                               grad_score(params, positive.h, positive.r, positive.t),
                                               terms.d_s);
                                }
                                if (terms.d_s_neg != 0.0) {
                                    accumulate(local_grads[static_cast<std::size_t>(w)],
                                               grad_score(params, pair.neg_h, positive.r, pair.neg_t),
                                               terms.d_s_neg);
                                }
                                std::scoped_lock lock(touched_mutex);
                                touched.note_pair(params, positive.h, positive.r, positive.t);
                                touched.note_pair(params, pair.neg_h, positive.r, pair.neg_t);
                            }
                        }
                    });
                }
                for (std::thread& thread : threads) thread.join();
                for (int w = 0; w < workers; ++w) {
                    for (auto& [key, grad] : local_grads[static_cast<std::size_t>(w)]) {
                        auto& slot = grads[key];
                        if (slot.empty()) slot.assign(grad.size(), 0.0);
                        for (std::size_t i = 0; i < grad.size(); ++i) slot[i] += grad[i];
                    }
                    loss_sum += local_loss[static_cast<std::size_t>(w)];
                    batch_pairs += local_pairs[static_cast<std::size_t>(w)];
                }
            }

            if (batch_pairs == 0) continue;
            const double step = config.learning_rate / static_cast<double>(batch_pairs);
            for (const auto& [key, grad] : grads) {
                auto row = param_row(params, key.first, key.second);
                for (std::size_t i = 0; i < grad.size(); ++i) row[i] -= step * grad[i];
                for (double v : row) {
                    if (!std::isfinite(v)) throw batch_fail("non-finite parameter after update");
                }
            }
            touched.finalize();
            apply_constraints(params, touched.entities, touched.relations, touched.pairs);
            pair_count += batch_pairs;
        }

        EpochStats stats_out;
        stats_out.mean_pair_loss = pair_count > 0 ? loss_sum / static_cast<double>(pair_count) : 0.0;
        stats_out.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
        result.report.epochs.push_back(stats_out);
        if (on_epoch) on_epoch(epoch, params, stats_out);
    }

    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - train_start).count();
    result.report.param_checksum = params.checksum();
    result.report.config_json = train_config_to_json(config);
    return result;
}

std::string train_config_to_json(const TrainConfig& config) {
    ordered_json doc;
    doc["objective"] = std::string(to_string(config.objective));
    doc["model"] = std::string(to_string(config.kind.variant));
    doc["distance_norm"] = std::string(to_string(config.kind.norm));
    doc["dim_entity"] = config.dim_entity;
    doc["dim_relation"] = config.dim_relation;
    doc["epochs"] = config.epochs;
    doc["learning_rate"] = config.learning_rate;
    doc["batch_size"] = config.batch_size;
    doc["negatives_per_positive"] = config.negatives_per_positive;
    doc["seed"] = config.seed;
    doc["detach_weight"] = config.detach_weight;
    doc["update_weight_cap"] = config.update_weight_exponent_cap;
    doc["theta_min"] = config.theta_min;
    doc["max_sampling_retries"] = config.max_sampling_retries;
    doc["workers"] = config.workers;
    doc["checkpoint_every"] = config.checkpoint_every;
    doc["filter_with_test"] = config.filter_with_test;
    doc["loss"] = {
        {"lambda", config.hyper.lambda},
        {"k", config.hyper.margin_weight_scale},
        {"gamma", config.hyper.gamma},
        {"eps_p", config.hyper.eps_p},
        {"eps_n", config.hyper.eps_n},
        {"alpha", config.hyper.alpha},
        {"beta", config.hyper.beta},
        {"weight_cap", config.hyper.weight_exponent_cap},
        {"add_margin_term", config.hyper.add_margin_term},
    };
    return doc.dump();
}

TrainConfig train_config_from_json(const std::string& json_text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("bad train config JSON: ") + e.what());
    }
    // JSON has no literal for infinity; nlohmann dumps it as null.
    auto as_double = [](const ordered_json& v) {
        if (v.is_null()) return std::numeric_limits<double>::infinity();
        return v.get<double>();
    };
    TrainConfig config;
    try {
        config.objective = objective_from_string(doc.at("objective").get<std::string>());
        config.kind.variant = model_variant_from_string(doc.at("model").get<std::string>());
        config.kind.norm = distance_norm_from_string(doc.at("distance_norm").get<std::string>());
        config.dim_entity = doc.at("dim_entity").get<int>();
        config.dim_relation = doc.at("dim_relation").get<int>();
        config.epochs = doc.at("epochs").get<int>();
        config.learning_rate = doc.at("learning_rate").get<double>();
        config.batch_size = doc.at("batch_size").get<int>();
        config.negatives_per_positive = doc.at("negatives_per_positive").get<int>();
        config.seed = doc.at("seed").get<std::uint64_t>();
        config.detach_weight = doc.at("detach_weight").get<bool>();
        config.update_weight_exponent_cap = as_double(doc.at("update_weight_cap"));
        config.theta_min = doc.at("theta_min").get<double>();
        config.max_sampling_retries = doc.at("max_sampling_retries").get<int>();
        config.workers = doc.at("workers").get<int>();
        config.checkpoint_every = doc.at("checkpoint_every").get<int>();
        config.filter_with_test = doc.at("filter_with_test").get<bool>();
        const auto& loss = doc.at("loss");
        config.hyper.lambda = loss.at("lambda").get<double>();
        config.hyper.margin_weight_scale = loss.at("k").get<double>();
        config.hyper.gamma = loss.at("gamma").get<double>();
        config.hyper.eps_p = loss.at("eps_p").get<double>();
        config.hyper.eps_n = loss.at("eps_n").get<double>();
        config.hyper.alpha = loss.at("alpha").get<std::vector<double>>();
        config.hyper.beta = loss.at("beta").get<std::vector<double>>();
        config.hyper.weight_exponent_cap = as_double(loss.at("weight_cap"));
        config.hyper.add_margin_term = loss.at("add_margin_term").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("missing train config field: ") + e.what());
    }
    return config;
}

}  // namespace prtransx
