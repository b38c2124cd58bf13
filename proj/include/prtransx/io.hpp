#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prtransx/types.hpp"

namespace prtransx {

// entities.tsv: `id<TAB>entity_type<TAB>code`, UTF-8, LF, header row.
void write_entities_tsv(const std::filesystem::path& path, const EntityCatalog& catalog);
EntityCatalog read_entities_tsv(const std::filesystem::path& path);

// triplets.tsv: `head_id<TAB>relation_id<TAB>tail_id<TAB>probability<TAB>
// cooccurrence_count<TAB>head_count`; probability with 10 significant digits.
void write_triplets_tsv(const std::filesystem::path& path, std::span<const ProbTriplet> triplets);
std::vector<ProbTriplet> read_triplets_tsv(const std::filesystem::path& path);

// hierarchy.tsv: `child_id<TAB>parent_id`.
void write_hierarchy_tsv(const std::filesystem::path& path, const DiseaseHierarchy& hierarchy);
DiseaseHierarchy read_hierarchy_tsv(const std::filesystem::path& path);

// split.json: train/test group keys plus seed and fraction provenance.
void write_split_json(const std::filesystem::path& path, const DataSplit& split, int top_k);
// Returns the split and the top-k value the split was built against.
std::pair<DataSplit, int> read_split_json(const std::filesystem::path& path);

// Shared low-level helpers.
std::vector<std::string> split_tsv_line(const std::string& line);
std::string format_probability(double p);  // 10 significant digits
void require_file(const std::filesystem::path& path, const std::string& producer_hint);

}  // namespace prtransx
