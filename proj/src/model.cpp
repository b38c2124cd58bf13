#include "prtransx/model.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <numeric>

#include "prtransx/rng.hpp"

namespace prtransx {

namespace {

constexpr std::uint64_t kMaskStream = 0x3A5CULL;

double sign0(double x) {
    if (x > 0.0) return 1.0;
    if (x < 0.0) return -1.0;
    return 0.0;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double l2_norm(std::span<const double> v) {
    return std::sqrt(dot(v, v));
}

void scale_to_unit_if_above(std::span<double> v) {
    const double n = l2_norm(v);
    if (n > 1.0) {
        for (double& x : v) x /= n;
    }
}

void scale_to_unit(std::span<double> v) {
    const double n = l2_norm(v);
    if (n > 0.0) {
        for (double& x : v) x /= n;
    }
}

}  // namespace

std::string_view to_string(ModelVariant variant) {
    switch (variant) {
        case ModelVariant::TransE: return "transE";
        case ModelVariant::TransH: return "transH";
        case ModelVariant::TransR: return "transR";
        case ModelVariant::TransD: return "transD";
        case ModelVariant::TranSparseShare: return "transSparseShare";
        case ModelVariant::TranSparseSeparate: return "transSparseSeparate";
    }
    return "?";
}

ModelVariant model_variant_from_string(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "transe") return ModelVariant::TransE;
    if (lower == "transh") return ModelVariant::TransH;
    if (lower == "transr") return ModelVariant::TransR;
    if (lower == "transd") return ModelVariant::TransD;
    if (lower == "transsparseshare" || lower == "transsparse(share)" || lower == "transsparse_share") {
        return ModelVariant::TranSparseShare;
    }
    if (lower == "transsparseseparate" || lower == "transsparse(separate)" ||
        lower == "transsparse_separate") {
        return ModelVariant::TranSparseSeparate;
    }
    throw ConfigError("unknown model variant: '" + std::string(name) + "'");
}

std::string_view to_string(DistanceNorm norm) {
    return norm == DistanceNorm::L1 ? "L1" : "L2";
}

DistanceNorm distance_norm_from_string(std::string_view name) {
    if (name == "L1" || name == "l1") return DistanceNorm::L1;
    if (name == "L2" || name == "l2") return DistanceNorm::L2;
    throw ConfigError("unknown distance norm: '" + std::string(name) + "'");
}

SparseMask SparseMask::dense(int rows, int cols) {
    SparseMask mask;
    mask.rows = rows;
    mask.cols = cols;
    mask.bits.assign((static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) + 63) / 64,
                     ~std::uint64_t{0});
    // Clear the tail bits beyond rows*cols so popcounts stay exact.
    const std::size_t total = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    const std::size_t rem = total % 64;
    if (rem != 0 && !mask.bits.empty()) {
        mask.bits.back() = (std::uint64_t{1} << rem) - 1;
    }
    return mask;
}

int SparseMask::count_active() const {
    int count = 0;
    for (std::uint64_t word : bits) count += std::popcount(word);
    return count;
}

std::vector<double> sparse_degree(std::span<const std::int64_t> relation_triplet_counts,
                                  double theta_min) {
    if (!(theta_min >= 0.0 && theta_min < 1.0)) {
        throw ConfigError("theta_min must be in [0, 1)");
    }
    const auto it = std::max_element(relation_triplet_counts.begin(), relation_triplet_counts.end());
    if (it == relation_triplet_counts.end() || *it <= 0) {
        throw ConfigError("sparse degrees require at least one relation with triplets");
    }
    const double n_max = static_cast<double>(*it);
    std::vector<double> theta;
    theta.reserve(relation_triplet_counts.size());
    for (std::int64_t count : relation_triplet_counts) {
        theta.push_back(1.0 - (1.0 - theta_min) * static_cast<double>(count) / n_max);
    }
    return theta;
}

SparseMask build_sparse_mask(double theta, int rows, int cols, std::uint64_t seed) {
    SparseMask mask = SparseMask::dense(rows, cols);
    const int total = rows * cols;
    const int zeroed = static_cast<int>(std::floor(theta * static_cast<double>(total)));
    std::vector<int> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < zeroed; ++i) mask.clear(order[static_cast<std::size_t>(i)]);
    return mask;
}

std::span<double> ModelParams::entity(int id) {
    return {entity_emb.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim_entity),
            static_cast<std::size_t>(dim_entity)};
}
std::span<const double> ModelParams::entity(int id) const {
    return {entity_emb.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim_entity),
            static_cast<std::size_t>(dim_entity)};
}
std::span<double> ModelParams::relation(int id) {
    return {relation_emb.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim_relation),
            static_cast<std::size_t>(dim_relation)};
}
std::span<const double> ModelParams::relation(int id) const {
    return {relation_emb.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim_relation),
            static_cast<std::size_t>(dim_relation)};
}
std::span<double> ModelParams::normal(int id) {
    return {hyperplane_normals.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim_entity),
            static_cast<std::size_t>(dim_entity)};
}
std::span<const double> ModelParams::normal(int id) const {
    return {hyperplane_normals.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim_entity),
            static_cast<std::size_t>(dim_entity)};
}
std::span<double> ModelParams::matrix(Side side, int relation) {
    auto& store = (side == Side::tail && !shares_matrix() &&
                   kind.variant == ModelVariant::TranSparseSeparate)
                      ? proj_tail
                      : proj_head;
    const std::size_t cell = static_cast<std::size_t>(dim_entity) * static_cast<std::size_t>(dim_relation);
    return {store.data() + static_cast<std::size_t>(relation) * cell, cell};
}
std::span<const double> ModelParams::matrix(Side side, int relation) const {
    const auto& store = (side == Side::tail && !shares_matrix() &&
                         kind.variant == ModelVariant::TranSparseSeparate)
                            ? proj_tail
                            : proj_head;
    const std::size_t cell = static_cast<std::size_t>(dim_entity) * static_cast<std::size_t>(dim_relation);
    return {store.data() + static_cast<std::size_t>(relation) * cell, cell};
}
std::span<double> ModelParams::entity_projection(int id) {
    return {entity_proj.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim_entity),
            static_cast<std::size_t>(dim_entity)};
}
std::span<const double> ModelParams::entity_projection(int id) const {
    return {entity_proj.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim_entity),
            static_cast<std::size_t>(dim_entity)};
}
std::span<double> ModelParams::relation_projection(int id) {
    return {relation_proj.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim_relation),
            static_cast<std::size_t>(dim_relation)};
}
std::span<const double> ModelParams::relation_projection(int id) const {
    return {relation_proj.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim_relation),
            static_cast<std::size_t>(dim_relation)};
}

const SparseMask& ModelParams::mask(Side side, int relation) const {
    if (side == Side::tail && kind.variant == ModelVariant::TranSparseSeparate) {
        return masks_tail[static_cast<std::size_t>(relation)];
    }
    return masks_head[static_cast<std::size_t>(relation)];
}

bool ModelParams::uses_matrices() const {
    return kind.variant == ModelVariant::TransR || kind.variant == ModelVariant::TranSparseShare ||
           kind.variant == ModelVariant::TranSparseSeparate;
}

bool ModelParams::shares_matrix() const {
    return kind.variant == ModelVariant::TransR || kind.variant == ModelVariant::TranSparseShare;
}

std::uint64_t ModelParams::checksum() const {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    auto mix_bytes = [&hash](const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            hash ^= bytes[i];
            hash *= 0x100000001b3ULL;
        }
    };
    auto mix = [&](const std::vector<double>& v) { mix_bytes(v.data(), v.size() * sizeof(double)); };
    mix(entity_emb);
    mix(relation_emb);
    mix(hyperplane_normals);
    mix(proj_head);
    mix(proj_tail);
    mix(entity_proj);
    mix(relation_proj);
    mix(theta);
    for (const auto* masks : {&masks_head, &masks_tail}) {
        for (const SparseMask& m : *masks) {
            mix_bytes(m.bits.data(), m.bits.size() * sizeof(std::uint64_t));
        }
    }
    return hash;
}

ModelParams init_params(ModelKind kind, int entity_count, int relation_count, int dim_entity,
                        int dim_relation, std::uint64_t seed, const SparseSpec* sparse) {
    if (dim_entity < 1 || dim_relation < 1) throw ConfigError("embedding dimensions must be >= 1");
    if (entity_count < 1 || relation_count < 1) {
        throw ConfigError("entity and relation counts must be >= 1");
    }
    const bool equal_dims_required = kind.variant == ModelVariant::TransE ||
                                     kind.variant == ModelVariant::TransH ||
                                     kind.variant == ModelVariant::TransD;
    if (equal_dims_required && dim_entity != dim_relation) {
        throw ConfigError("entity and relation dimensions must match for TransE/H/D");
    }

    ModelParams params;
    params.kind = kind;
    params.entity_count = entity_count;
    params.relation_count = relation_count;
    params.dim_entity = dim_entity;
    params.dim_relation = dim_relation;
    params.init_seed = seed;
    params.mask_seed = derive_seed(seed, kMaskStream);

    Rng rng(derive_seed(seed, 0x1A17ULL));
    auto fill_uniform = [&rng](std::span<double> out, int dim) {
        const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
        for (double& x : out) x = uniform_in(rng, -bound, bound);
    };

    params.entity_emb.resize(static_cast<std::size_t>(entity_count) * static_cast<std::size_t>(dim_entity));
    for (int e = 0; e < entity_count; ++e) {
        fill_uniform(params.entity(e), dim_entity);
        scale_to_unit(params.entity(e));
    }
    params.relation_emb.resize(static_cast<std::size_t>(relation_count) *
                               static_cast<std::size_t>(dim_relation));
    for (int r = 0; r < relation_count; ++r) {
        fill_uniform(params.relation(r), dim_relation);
        scale_to_unit(params.relation(r));
    }

    const std::size_t cell = static_cast<std::size_t>(dim_entity) * static_cast<std::size_t>(dim_relation);
    auto identity_matrices = [&](std::vector<double>& store) {
        store.assign(static_cast<std::size_t>(relation_count) * cell, 0.0);
        for (int r = 0; r < relation_count; ++r) {
            for (int i = 0; i < std::min(dim_entity, dim_relation); ++i) {
                store[static_cast<std::size_t>(r) * cell + static_cast<std::size_t>(i) *
                          static_cast<std::size_t>(dim_entity) + static_cast<std::size_t>(i)] = 1.0;
            }
        }
    };

    switch (kind.variant) {
        case ModelVariant::TransE:
            break;
        case ModelVariant::TransH:
            params.hyperplane_normals.resize(static_cast<std::size_t>(relation_count) *
                                             static_cast<std::size_t>(dim_entity));
            for (int r = 0; r < relation_count; ++r) {
                fill_uniform(params.normal(r), dim_entity);
                scale_to_unit(params.normal(r));
            }
            break;
        case ModelVariant::TransR:
            identity_matrices(params.proj_head);
            break;
        case ModelVariant::TransD:
            params.entity_proj.assign(params.entity_emb.size(), 0.0);
            params.relation_proj.assign(params.relation_emb.size(), 0.0);
            break;
        case ModelVariant::TranSparseShare:
        case ModelVariant::TranSparseSeparate: {
            if (sparse == nullptr) {
                throw ConfigError("TranSparse variants require relation triplet counts");
            }
            if (sparse->relation_triplet_counts.size() != static_cast<std::size_t>(relation_count)) {
                throw ConfigError("sparse spec must cover every relation");
            }
            params.theta = sparse_degree(sparse->relation_triplet_counts, sparse->theta_min);
            identity_matrices(params.proj_head);
            params.masks_head.reserve(static_cast<std::size_t>(relation_count));
            for (int r = 0; r < relation_count; ++r) {
                params.masks_head.push_back(build_sparse_mask(
                    params.theta[static_cast<std::size_t>(r)], dim_relation, dim_entity,
                    derive_seed(params.mask_seed, static_cast<std::uint64_t>(r), 0)));
            }
            if (kind.variant == ModelVariant::TranSparseSeparate) {
                identity_matrices(params.proj_tail);
                params.masks_tail.reserve(static_cast<std::size_t>(relation_count));
                for (int r = 0; r < relation_count; ++r) {
                    params.masks_tail.push_back(build_sparse_mask(
                        params.theta[static_cast<std::size_t>(r)], dim_relation, dim_entity,
                        derive_seed(params.mask_seed, static_cast<std::uint64_t>(r), 1)));
                }
            }
            // Masked entries are zero from the start.
            for (int r = 0; r < relation_count; ++r) {
                for (Side side : {Side::head, Side::tail}) {
                    if (side == Side::tail && kind.variant != ModelVariant::TranSparseSeparate) break;
                    auto m = params.matrix(side, r);
                    const SparseMask& mask = params.mask(side, r);
                    for (std::size_t i = 0; i < m.size(); ++i) {
                        if (!mask.active(static_cast<int>(i))) m[i] = 0.0;
                    }
                }
            }
            break;
        }
    }
    return params;
}

namespace {

// out = M e, with M laid out k x d row-major.
void matvec(std::span<const double> m, std::span<const double> e, std::span<double> out) {
    const std::size_t k = out.size();
    const std::size_t d = e.size();
    for (std::size_t row = 0; row < k; ++row) {
        double sum = 0.0;
        const double* m_row = m.data() + row * d;
        for (std::size_t col = 0; col < d; ++col) sum += m_row[col] * e[col];
        out[row] = sum;
    }
}

void project_into(const ModelParams& params, int entity, int relation, Side side,
                  std::span<double> out) {
    const auto e = params.entity(entity);
    switch (params.kind.variant) {
        case ModelVariant::TransE: {
            std::copy(e.begin(), e.end(), out.begin());
            break;
        }
        case ModelVariant::TransH: {
            const auto w = params.normal(relation);
            const double we = dot(w, e);
            for (std::size_t i = 0; i < e.size(); ++i) out[i] = e[i] - we * w[i];
            break;
        }
        case ModelVariant::TransR:
        case ModelVariant::TranSparseShare:
        case ModelVariant::TranSparseSeparate: {
            matvec(params.matrix(side, relation), e, out);
            break;
        }
        case ModelVariant::TransD: {
            const auto ep = params.entity_projection(entity);
            const auto rp = params.relation_projection(relation);
            const double epe = dot(ep, e);
            for (std::size_t i = 0; i < e.size(); ++i) out[i] = e[i] + epe * rp[i];
            break;
        }
    }
}

}  // namespace

std::vector<double> project(const ModelParams& params, int entity, int relation, Side side) {
    std::vector<double> out(static_cast<std::size_t>(params.dim_relation));
    project_into(params, entity, relation, side, out);
    return out;
}

double score(const ModelParams& params, int h, int r, int t) {
    const std::size_t k = static_cast<std::size_t>(params.dim_relation);
    std::vector<double> hp(k), tp(k);
    project_into(params, h, r, Side::head, hp);
    project_into(params, t, r, Side::tail, tp);
    const auto rv = params.relation(r);
    double sum = 0.0;
    if (params.kind.norm == DistanceNorm::L1) {
        for (std::size_t i = 0; i < k; ++i) sum += std::abs(hp[i] + rv[i] - tp[i]);
    } else {
        for (std::size_t i = 0; i < k; ++i) {
            const double v = hp[i] + rv[i] - tp[i];
            sum += v * v;
        }
        sum = std::sqrt(sum);
    }
    return sum;
}

ScoreGrad grad_score(const ModelParams& params, int h, int r, int t) {
    const std::size_t k = static_cast<std::size_t>(params.dim_relation);
    const std::size_t d = static_cast<std::size_t>(params.dim_entity);
    std::vector<double> hp(k), tp(k);
    project_into(params, h, r, Side::head, hp);
    project_into(params, t, r, Side::tail, tp);
    const auto rv = params.relation(r);

    // g = d score / d v where v = h_p + r - t_p.
    std::vector<double> v(k), g(k);
    for (std::size_t i = 0; i < k; ++i) v[i] = hp[i] + rv[i] - tp[i];
    if (params.kind.norm == DistanceNorm::L1) {
        for (std::size_t i = 0; i < k; ++i) g[i] = sign0(v[i]);
    } else {
        const double n = l2_norm(v);
        if (n > 0.0) {
            for (std::size_t i = 0; i < k; ++i) g[i] = v[i] / n;
        }
    }

    ScoreGrad out;
    auto push = [&out](ParamTable table, int index, std::vector<double> grad) {
        out.entries.push_back({table, index, std::move(grad)});
    };
    push(ParamTable::relation_emb, r, g);

    const auto he = params.entity(h);
    const auto te = params.entity(t);
    switch (params.kind.variant) {
        case ModelVariant::TransE: {
            std::vector<double> gh = g, gt(k);
            for (std::size_t i = 0; i < k; ++i) gt[i] = -g[i];
            push(ParamTable::entity_emb, h, std::move(gh));
            push(ParamTable::entity_emb, t, std::move(gt));
            break;
        }
        case ModelVariant::TransH: {
            const auto w = params.normal(r);
            const double wg = dot(w, g);
            std::vector<double> gh(d), gt(d), gw(d);
            for (std::size_t i = 0; i < d; ++i) {
                gh[i] = g[i] - wg * w[i];
                gt[i] = -gh[i];
            }
            // v depends on w through -(w.h)w + (w.t)w.
            const double wh = dot(w, he);
            const double wt = dot(w, te);
            for (std::size_t i = 0; i < d; ++i) {
                gw[i] = (te[i] - he[i]) * wg + (wt - wh) * g[i];
            }
            push(ParamTable::entity_emb, h, std::move(gh));
            push(ParamTable::entity_emb, t, std::move(gt));
            push(ParamTable::hyperplane_normal, r, std::move(gw));
            break;
        }
        case ModelVariant::TransR:
        case ModelVariant::TranSparseShare:
        case ModelVariant::TranSparseSeparate: {
            const bool shared = params.shares_matrix();
            const auto mh = params.matrix(Side::head, r);
            const auto mt = params.matrix(Side::tail, r);
            std::vector<double> gh(d, 0.0), gt(d, 0.0);
            for (std::size_t row = 0; row < k; ++row) {
                for (std::size_t col = 0; col < d; ++col) {
                    gh[col] += mh[row * d + col] * g[row];
                    gt[col] -= mt[row * d + col] * g[row];
                }
            }
            push(ParamTable::entity_emb, h, std::move(gh));
            push(ParamTable::entity_emb, t, std::move(gt));

            const bool sparse = params.kind.variant != ModelVariant::TransR;
            auto masked = [&](Side side, std::vector<double> grad) {
                if (!sparse) return grad;
                const SparseMask& mask = params.mask(side, r);
                for (std::size_t i = 0; i < grad.size(); ++i) {
                    if (!mask.active(static_cast<int>(i))) grad[i] = 0.0;
                }
                return grad;
            };
            if (shared) {
                // d score / d M = g (h - t)^T.
                std::vector<double> gm(k * d);
                for (std::size_t row = 0; row < k; ++row) {
                    for (std::size_t col = 0; col < d; ++col) {
                        gm[row * d + col] = g[row] * (he[col] - te[col]);
                    }
                }
                push(ParamTable::proj_matrix_head, r, masked(Side::head, std::move(gm)));
            } else {
                std::vector<double> gmh(k * d), gmt(k * d);
                for (std::size_t row = 0; row < k; ++row) {
                    for (std::size_t col = 0; col < d; ++col) {
                        gmh[row * d + col] = g[row] * he[col];
                        gmt[row * d + col] = -g[row] * te[col];
                    }
                }
                push(ParamTable::proj_matrix_head, r, masked(Side::head, std::move(gmh)));
                push(ParamTable::proj_matrix_tail, r, masked(Side::tail, std::move(gmt)));
            }
            break;
        }
        case ModelVariant::TransD: {
            const auto hp_vec = params.entity_projection(h);
            const auto tp_vec = params.entity_projection(t);
            const auto rp = params.relation_projection(r);
            const double rpg = dot(rp, g);
            std::vector<double> gh(d), gt(d), ghp(d), gtp(d), grp(d);
            for (std::size_t i = 0; i < d; ++i) {
                gh[i] = g[i] + hp_vec[i] * rpg;
                gt[i] = -(g[i] + tp_vec[i] * rpg);
                ghp[i] = he[i] * rpg;
                gtp[i] = -te[i] * rpg;
            }
            const double scale = dot(hp_vec, he) - dot(tp_vec, te);
            for (std::size_t i = 0; i < d; ++i) grp[i] = scale * g[i];
            push(ParamTable::entity_emb, h, std::move(gh));
            push(ParamTable::entity_emb, t, std::move(gt));
            push(ParamTable::entity_proj, h, std::move(ghp));
            push(ParamTable::entity_proj, t, std::move(gtp));
            push(ParamTable::relation_proj, r, std::move(grp));
            break;
        }
    }
    return out;
}

std::span<double> param_row(ModelParams& params, ParamTable table, int index) {
    switch (table) {
        case ParamTable::entity_emb: return params.entity(index);
        case ParamTable::relation_emb: return params.relation(index);
        case ParamTable::hyperplane_normal: return params.normal(index);
        case ParamTable::proj_matrix_head: return params.matrix(Side::head, index);
        case ParamTable::proj_matrix_tail: return params.matrix(Side::tail, index);
        case ParamTable::entity_proj: return params.entity_projection(index);
        case ParamTable::relation_proj: return params.relation_projection(index);
    }
    throw ConfigError("unknown parameter table");
}

namespace {

// Soft corrective steps toward || project(e) || <= 1, in the style of the
// original implementations: a few small gradient steps on the squared norm.
void correct_projected_norm(ModelParams& params, int relation, int entity) {
    constexpr int kMaxIters = 25;
    constexpr double kStep = 0.05;
    const std::size_t k = static_cast<std::size_t>(params.dim_relation);
    const std::size_t d = static_cast<std::size_t>(params.dim_entity);
    for (Side side : {Side::head, Side::tail}) {
        if (params.shares_matrix() && side == Side::tail) break;  // same matrix as head
        if (params.kind.variant == ModelVariant::TransD && side == Side::tail) break;
        for (int iter = 0; iter < kMaxIters; ++iter) {
            std::vector<double> u(k);
            project_into(params, entity, relation, side, u);
            const double n2 = dot(u, u);
            if (n2 <= 1.0) break;
            auto e = params.entity(entity);
            if (params.uses_matrices()) {
                auto m = params.matrix(side, relation);
                const bool sparse = params.kind.variant != ModelVariant::TransR;
                const SparseMask* mask = sparse ? &params.mask(side, relation) : nullptr;
                std::vector<double> grad_e(d, 0.0);
                for (std::size_t row = 0; row < k; ++row) {
                    for (std::size_t col = 0; col < d; ++col) {
                        grad_e[col] += m[row * d + col] * u[row];
                    }
                }
                for (std::size_t row = 0; row < k; ++row) {
                    for (std::size_t col = 0; col < d; ++col) {
                        const std::size_t idx = row * d + col;
                        if (mask != nullptr && !mask->active(static_cast<int>(idx))) continue;
                        m[idx] -= kStep * 2.0 * u[row] * e[col];
                    }
                }
                for (std::size_t col = 0; col < d; ++col) e[col] -= kStep * 2.0 * grad_e[col];
            } else if (params.kind.variant == ModelVariant::TransD) {
                auto ep = params.entity_projection(entity);
                auto rp = params.relation_projection(relation);
                const double ur = dot(std::span<const double>(u), std::span<const double>(rp));
                const double epe = dot(std::span<const double>(ep), std::span<const double>(e));
                std::vector<double> grad_e(d), grad_ep(d), grad_rp(d);
                for (std::size_t i = 0; i < d; ++i) {
                    grad_e[i] = 2.0 * (u[i] + ep[i] * ur);
                    grad_ep[i] = 2.0 * e[i] * ur;
                    grad_rp[i] = 2.0 * epe * u[i];
                }
                for (std::size_t i = 0; i < d; ++i) {
                    e[i] -= kStep * grad_e[i];
                    ep[i] -= kStep * grad_ep[i];
                    rp[i] -= kStep * grad_rp[i];
                }
            } else {
                break;
            }
        }
    }
}

}  // namespace

void apply_constraints(ModelParams& params, std::span<const int> touched_entities,
                       std::span<const int> touched_relations,
                       std::span<const std::pair<int, int>> touched_pairs) {
    for (int e : touched_entities) scale_to_unit_if_above(params.entity(e));
    if (params.kind.variant == ModelVariant::TransH) {
        for (int r : touched_relations) scale_to_unit(params.normal(r));
    }
    if (params.uses_matrices() || params.kind.variant == ModelVariant::TransD) {
        for (const auto& [relation, entity] : touched_pairs) {
            correct_projected_norm(params, relation, entity);
        }
        // Corrective steps can push an entity back above unit norm.
        for (const auto& [relation, entity] : touched_pairs) {
            scale_to_unit_if_above(params.entity(entity));
        }
    }
}

}  // namespace prtransx
