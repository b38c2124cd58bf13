#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "prtransx/loss.hpp"
#include "prtransx/model.hpp"
#include "prtransx/sampler.hpp"
#include "prtransx/types.hpp"

namespace prtransx {

enum class Objective : std::uint8_t { margin = 0, probabilistic = 1 };

std::string_view to_string(Objective objective);
Objective objective_from_string(std::string_view name);

struct TrainConfig {
    Objective objective = Objective::probabilistic;
    ModelKind kind;
    int dim_entity = 20;
    int dim_relation = 20;
    int epochs = 500;
    double learning_rate = 0.01;
    int batch_size = 256;
    int negatives_per_positive = 1;
    std::uint64_t seed = 42;
    Hyperparams hyper;
    bool detach_weight = true;
    // Exponent cap on the pair weight used for parameter updates. The loss
    // cap (hyper.weight_exponent_cap, default 60) keeps reported values
    // faithful, but e^60-scaled SGD steps diverge at any learning rate, so
    // updates use this tighter cap. Raise it to hyper's value to train on
    // the unmodified gradient.
    double update_weight_exponent_cap = 3.0;
    double theta_min = 0.3;
    int max_sampling_retries = 100;
    int workers = 1;
    int checkpoint_every = 0;  // epochs between intermediate checkpoints; 0 = final only
    // When false, the negative-sampling filter covers only train positives
    // instead of train + test.
    bool filter_with_test = true;

    void validate() const;
};

struct EpochStats {
    double mean_pair_loss = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    double wall_seconds = 0.0;
    std::uint64_t param_checksum = 0;
    std::string config_json;  // resolved TrainConfig echo
};

struct TrainData {
    const EntityCatalog* catalog = nullptr;
    const std::vector<Relation>* relations = nullptr;
    const DiseaseHierarchy* hierarchy = nullptr;
    std::vector<ProbTriplet> train_triplets;  // probabilities clamped per the loss rules
    PositiveIndex positive_filter;            // known positives for negative sampling
};

// Bundle the training inputs: clamps each positive's probability and builds
// the negative-sampling filter over train (plus test when configured).
TrainData make_train_data(const EntityCatalog& catalog, const std::vector<Relation>& relations,
                          const DiseaseHierarchy& hierarchy,
                          std::vector<ProbTriplet> train_triplets,
                          std::vector<ProbTriplet> extra_filter_triplets,
                          const Hyperparams& hyper);

struct TrainResult {
    ModelParams params;
    TrainReport report;
};

using EpochCallback = std::function<void(int epoch, const ModelParams&, const EpochStats&)>;

// Seeded-SGD loop over epochs: shuffle positives, sample one (or more)
// negatives per positive, accumulate per-batch analytic gradients, step,
// then re-apply norm constraints to the touched parameters. Deterministic
// with workers == 1. Throws NonFiniteError naming the batch when a loss or
// parameter stops being finite. Pass initial_params to resume instead of
// initializing from the seed.
TrainResult train(const TrainData& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {},
                  const ModelParams* initial_params = nullptr);

std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& json_text);

}  // namespace prtransx
