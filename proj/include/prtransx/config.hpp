#pragma once

#include <filesystem>
#include <string>

#include "prtransx/evaluator.hpp"
#include "prtransx/synth.hpp"
#include "prtransx/trainer.hpp"

namespace prtransx {

// Everything a pipeline run needs, grouped by stage. The reference loss
// settings are baked in as defaults, so an empty config file is a valid run.
struct RunConfig {
    WorldConfig world;
    std::int64_t visits = 50000;

    double test_fraction = 0.2;
    std::uint64_t split_seed = 7;
    bool stratified = true;
    int top_k = 20;

    TrainConfig train;

    RelevanceThresholds thresholds;
    MetricOptions eval;
};

// Flat dotted-key text: one `section.key = value` per line, `#` comments.
// Unknown keys are rejected with the offending key named.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base = {});

// Fully resolved echo of a config, in the same dotted-key format.
std::string dump_config(const RunConfig& config);

}  // namespace prtransx
