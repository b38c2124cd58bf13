#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "prtransx/model.hpp"

namespace prtransx {

// Checkpoint layout (all integers and floats little-endian):
//   magic "PRTX1" (5 bytes)
//   u8 variant, u8 distance norm
//   u32 dim_entity, u32 dim_relation
//   u64 entity_count, u64 relation_count, u64 init_seed, u64 mask_seed
//   u32 config blob length, then that many bytes (JSON, trainer provenance)
//   f64 arrays in order: entity_emb, relation_emb, hyperplane_normals,
//     proj_head, proj_tail, entity_proj, relation_proj, theta
//   masks as u64 bitset words: masks_head then masks_tail
// Array presence/length is fully determined by the header fields.
void save_checkpoint(const ModelParams& params, const std::string& config_json,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
    ModelParams params;
    std::string config_json;
};

// Verifies the magic, sizes and (when given) the expected variant.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 std::optional<ModelVariant> expected_variant = std::nullopt);

}  // namespace prtransx
