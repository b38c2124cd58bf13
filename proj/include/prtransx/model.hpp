#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prtransx/errors.hpp"

namespace prtransx {

enum class ModelVariant : std::uint8_t {
    TransE = 0,
    TransH,
    TransR,
    TransD,
    TranSparseShare,
    TranSparseSeparate,
};

enum class DistanceNorm : std::uint8_t { L1 = 0, L2 = 1 };

std::string_view to_string(ModelVariant variant);
ModelVariant model_variant_from_string(std::string_view name);
std::string_view to_string(DistanceNorm norm);
DistanceNorm distance_norm_from_string(std::string_view name);

struct ModelKind {
    ModelVariant variant = ModelVariant::TransE;
    DistanceNorm norm = DistanceNorm::L1;
};

enum class Side : std::uint8_t { head = 0, tail = 1 };

// Fixed binary pattern over a k x d projection matrix; masked entries stay
// exactly zero for the lifetime of the parameters.
struct SparseMask {
    int rows = 0;  // k
    int cols = 0;  // d
    std::vector<std::uint64_t> bits;  // rows*cols bits, 1 = entry active

    static SparseMask dense(int rows, int cols);
    bool active(int flat_index) const {
        return (bits[static_cast<std::size_t>(flat_index) >> 6] >>
                (static_cast<std::size_t>(flat_index) & 63)) & 1u;
    }
    void clear(int flat_index) {
        bits[static_cast<std::size_t>(flat_index) >> 6] &=
            ~(std::uint64_t{1} << (static_cast<std::size_t>(flat_index) & 63));
    }
    int count_active() const;
};

// Per-relation sparseness degrees theta_r = 1 - (1 - theta_min) * N_r / N_r*
// from relation triplet counts; the most frequent relation gets theta_min.
std::vector<double> sparse_degree(std::span<const std::int64_t> relation_triplet_counts,
                                  double theta_min);

// Build a mask zeroing exactly floor(theta * rows * cols) entries, chosen by
// a seeded uniform pattern.
SparseMask build_sparse_mask(double theta, int rows, int cols, std::uint64_t seed);

struct SparseSpec {
    std::vector<std::int64_t> relation_triplet_counts;
    double theta_min = 0.3;
};

// Embedding state of one model. Which side tables are populated depends on
// the variant; vector layouts are row-major per id.
struct ModelParams {
    ModelKind kind;
    int entity_count = 0;
    int relation_count = 0;
    int dim_entity = 0;    // d
    int dim_relation = 0;  // k
    std::uint64_t init_seed = 0;
    std::uint64_t mask_seed = 0;

    std::vector<double> entity_emb;          // entity_count * d
    std::vector<double> relation_emb;        // relation_count * k
    std::vector<double> hyperplane_normals;  // TransH: relation_count * d, unit norm
    std::vector<double> proj_head;           // TransR/TranSparse: relation_count * (k*d)
    std::vector<double> proj_tail;           // TranSparseSeparate: relation_count * (k*d)
    std::vector<double> entity_proj;         // TransD: entity_count * d
    std::vector<double> relation_proj;       // TransD: relation_count * k
    std::vector<SparseMask> masks_head;      // TranSparse: per relation
    std::vector<SparseMask> masks_tail;      // TranSparseSeparate: per relation
    std::vector<double> theta;               // TranSparse: per relation

    std::span<double> entity(int id);
    std::span<const double> entity(int id) const;
    std::span<double> relation(int id);
    std::span<const double> relation(int id) const;
    std::span<double> normal(int id);
    std::span<const double> normal(int id) const;
    std::span<double> matrix(Side side, int relation);
    std::span<const double> matrix(Side side, int relation) const;
    std::span<double> entity_projection(int id);
    std::span<const double> entity_projection(int id) const;
    std::span<double> relation_projection(int id);
    std::span<const double> relation_projection(int id) const;
    const SparseMask& mask(Side side, int relation) const;

    bool uses_matrices() const;
    bool shares_matrix() const;  // head and tail share one matrix per relation

    // FNV-1a over all parameter bytes in checkpoint order.
    std::uint64_t checksum() const;
};

// Uniform [-6/sqrt(d), 6/sqrt(d)] draws, unit-normalized where the variant's
// convention requires; projection matrices start at identity (TranSparse:
// identity under its mask), TransD projection vectors start at zero. The
// sparse spec is required for the TranSparse variants and ignored otherwise.
ModelParams init_params(ModelKind kind, int entity_count, int relation_count, int dim_entity,
                        int dim_relation, std::uint64_t seed, const SparseSpec* sparse = nullptr);

// h_p / t_p of the given entity under the given relation.
std::vector<double> project(const ModelParams& params, int entity, int relation, Side side);

// f_r(h, t) = || h_p + r - t_p || in the configured norm.
double score(const ModelParams& params, int h, int r, int t);

enum class ParamTable : std::uint8_t {
    entity_emb = 0,
    relation_emb,
    hyperplane_normal,
    proj_matrix_head,
    proj_matrix_tail,
    entity_proj,
    relation_proj,
};

struct GradEntry {
    ParamTable table;
    int index = 0;  // entity or relation id
    std::vector<double> grad;
};

// Sparse gradient of the score; entries may repeat a key (e.g. h == t) and
// must be accumulated by consumers.
struct ScoreGrad {
    std::vector<GradEntry> entries;
};

// Exact for L2 (zero at the nondifferentiable origin); sign subgradient with
// sign(0) := 0 for L1.
ScoreGrad grad_score(const ModelParams& params, int h, int r, int t);

// Mutable view of the parameter row a GradEntry addresses.
std::span<double> param_row(ModelParams& params, ParamTable table, int index);

// Norm constraints: entity embeddings to L2 norm <= 1, hyperplane normals to
// unit norm, and soft corrective steps toward || project(e) || <= 1 for the
// matrix/dynamic variants on the given (relation, entity) pairs.
void apply_constraints(ModelParams& params, std::span<const int> touched_entities,
                       std::span<const int> touched_relations,
                       std::span<const std::pair<int, int>> touched_pairs = {});

}  // namespace prtransx
