#include "prtransx/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace prtransx {

namespace {

constexpr char kMagic[5] = {'P', 'R', 'T', 'X', '1'};

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
public:
    Reader(const std::string& data, const std::string& path) : data_(data), path_(path) {}

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]))
                 << (8 * i);
        }
        pos_ += 8;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]))
                 << (8 * i);
        }
        pos_ += 4;
        return v;
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string bytes(std::size_t n) {
        need(n);
        std::string out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    bool exhausted() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) {
        if (pos_ + n > data_.size()) {
            throw CheckpointError("corrupt checkpoint (truncated): " + path_);
        }
    }
    const std::string& data_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& config_json,
                     const std::filesystem::path& path) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    out.push_back(static_cast<char>(params.kind.variant));
    out.push_back(static_cast<char>(params.kind.norm));
    put_u32(out, static_cast<std::uint32_t>(params.dim_entity));
    put_u32(out, static_cast<std::uint32_t>(params.dim_relation));
    put_u64(out, static_cast<std::uint64_t>(params.entity_count));
    put_u64(out, static_cast<std::uint64_t>(params.relation_count));
    put_u64(out, params.init_seed);
    put_u64(out, params.mask_seed);
    put_u32(out, static_cast<std::uint32_t>(config_json.size()));
    out.append(config_json);
    for (const std::vector<double>* array :
         {&params.entity_emb, &params.relation_emb, &params.hyperplane_normals, &params.proj_head,
          &params.proj_tail, &params.entity_proj, &params.relation_proj, &params.theta}) {
        for (double v : *array) put_f64(out, v);
    }
    for (const std::vector<SparseMask>* masks : {&params.masks_head, &params.masks_tail}) {
        for (const SparseMask& mask : *masks) {
            for (std::uint64_t word : mask.bits) put_u64(out, word);
        }
    }

    std::ofstream file(path, std::ios::binary);
    if (!file) throw MissingInputError("cannot open for writing: " + path.string());
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw CheckpointError("failed writing checkpoint: " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 std::optional<ModelVariant> expected_variant) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw MissingInputError("cannot open for reading: " + path.string());
    std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    Reader reader(data, path.string());

    if (reader.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
        throw CheckpointError("corrupt checkpoint (bad magic): " + path.string());
    }
    LoadedCheckpoint loaded;
    ModelParams& params = loaded.params;
    const std::uint8_t variant_tag = reader.u8();
    if (variant_tag > static_cast<std::uint8_t>(ModelVariant::TranSparseSeparate)) {
        throw CheckpointError("corrupt checkpoint (unknown variant tag): " + path.string());
    }
    params.kind.variant = static_cast<ModelVariant>(variant_tag);
    if (expected_variant && params.kind.variant != *expected_variant) {
        throw CheckpointError("checkpoint variant mismatch: file holds " +
                              std::string(to_string(params.kind.variant)) + ", expected " +
                              std::string(to_string(*expected_variant)));
    }
    const std::uint8_t norm_tag = reader.u8();
    if (norm_tag > 1) throw CheckpointError("corrupt checkpoint (bad norm tag): " + path.string());
    params.kind.norm = static_cast<DistanceNorm>(norm_tag);
    params.dim_entity = static_cast<int>(reader.u32());
    params.dim_relation = static_cast<int>(reader.u32());
    params.entity_count = static_cast<int>(reader.u64());
    params.relation_count = static_cast<int>(reader.u64());
    params.init_seed = reader.u64();
    params.mask_seed = reader.u64();
    if (params.dim_entity < 1 || params.dim_relation < 1 || params.entity_count < 1 ||
        params.relation_count < 1) {
        throw CheckpointError("corrupt checkpoint (bad dimensions): " + path.string());
    }
    loaded.config_json = reader.bytes(reader.u32());

    const std::size_t d = static_cast<std::size_t>(params.dim_entity);
    const std::size_t k = static_cast<std::size_t>(params.dim_relation);
    const std::size_t ents = static_cast<std::size_t>(params.entity_count);
    const std::size_t rels = static_cast<std::size_t>(params.relation_count);
    const std::size_t cell = d * k;

    std::size_t n_normals = 0, n_head = 0, n_tail = 0, n_eproj = 0, n_rproj = 0, n_theta = 0;
    bool head_masks = false, tail_masks = false;
    switch (params.kind.variant) {
        case ModelVariant::TransE: break;
        case ModelVariant::TransH: n_normals = rels * d; break;
        case ModelVariant::TransR: n_head = rels * cell; break;
        case ModelVariant::TransD:
            n_eproj = ents * d;
            n_rproj = rels * k;
            break;
        case ModelVariant::TranSparseShare:
            n_head = rels * cell;
            n_theta = rels;
            head_masks = true;
            break;
        case ModelVariant::TranSparseSeparate:
            n_head = rels * cell;
            n_tail = rels * cell;
            n_theta = rels;
            head_masks = tail_masks = true;
            break;
    }

    auto read_array = [&reader](std::vector<double>& out, std::size_t n) {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = reader.f64();
    };
    read_array(params.entity_emb, ents * d);
    read_array(params.relation_emb, rels * k);
    read_array(params.hyperplane_normals, n_normals);
    read_array(params.proj_head, n_head);
    read_array(params.proj_tail, n_tail);
    read_array(params.entity_proj, n_eproj);
    read_array(params.relation_proj, n_rproj);
    read_array(params.theta, n_theta);

    auto read_masks = [&](std::vector<SparseMask>& masks) {
        masks.clear();
        const std::size_t words = (cell + 63) / 64;
        for (std::size_t r = 0; r < rels; ++r) {
            SparseMask mask;
            mask.rows = params.dim_relation;
            mask.cols = params.dim_entity;
            mask.bits.resize(words);
            for (std::size_t w = 0; w < words; ++w) mask.bits[w] = reader.u64();
            masks.push_back(std::move(mask));
        }
    };
    if (head_masks) read_masks(params.masks_head);
    if (tail_masks) read_masks(params.masks_tail);

    if (!reader.exhausted()) {
        throw CheckpointError("corrupt checkpoint (trailing bytes): " + path.string());
    }
    return loaded;
}

}  // namespace prtransx
