#include "prtransx/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace prtransx {

namespace {

using ordered_json = nlohmann::ordered_json;

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);  // binary: LF line endings everywhere
    if (!out) throw MissingInputError("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open for reading: " + path.string());
    return in;
}

int parse_int(const std::string& token, const std::string& context) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw SchemaError("expected integer for " + context + ", got '" + token + "'");
    }
    return value;
}

std::int64_t parse_int64(const std::string& token, const std::string& context) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw SchemaError("expected integer for " + context + ", got '" + token + "'");
    }
    return value;
}

double parse_double(const std::string& token, const std::string& context) {
    try {
        std::size_t consumed = 0;
        const double value = std::stod(token, &consumed);
        if (consumed != token.size()) throw std::invalid_argument(token);
        return value;
    } catch (const std::exception&) {
        throw SchemaError("expected number for " + context + ", got '" + token + "'");
    }
}

}  // namespace

std::vector<std::string> split_tsv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

std::string format_probability(double p) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", p);
    return buf;
}

void require_file(const std::filesystem::path& path, const std::string& producer_hint) {
    if (!std::filesystem::exists(path)) {
        throw MissingInputError("missing input " + path.string() + " (produce it with " +
                                producer_hint + ")");
    }
}

void write_entities_tsv(const std::filesystem::path& path, const EntityCatalog& catalog) {
    std::ofstream out = open_out(path);
    out << "id\tentity_type\tcode\n";
    for (const Entity& entity : catalog.entities()) {
        out << entity.id << '\t' << to_string(entity.type) << '\t' << entity.code << '\n';
    }
}

EntityCatalog read_entities_tsv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::vector<Entity> entities;
    std::string line;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_tsv_line(line);
        if (first) {
            first = false;
            if (fields.size() >= 1 && fields[0] == "id") continue;  // header
        }
        if (fields.size() != 3) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                              ": expected 3 tab-separated fields");
        }
        Entity entity;
        entity.id = parse_int(fields[0], "entity id");
        entity.type = entity_type_from_string(fields[1]);
        entity.code = fields[2];
        entities.push_back(std::move(entity));
    }
    return EntityCatalog(std::move(entities));
}

void write_triplets_tsv(const std::filesystem::path& path, std::span<const ProbTriplet> triplets) {
    std::ofstream out = open_out(path);
    for (const ProbTriplet& t : triplets) {
        out << t.h << '\t' << t.r << '\t' << t.t << '\t' << format_probability(t.p) << '\t'
            << t.cooccurrence_count << '\t' << t.head_count << '\n';
    }
}

std::vector<ProbTriplet> read_triplets_tsv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::vector<ProbTriplet> triplets;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_tsv_line(line);
        if (fields.size() != 6) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                              ": expected 6 tab-separated fields");
        }
        ProbTriplet t;
        t.h = parse_int(fields[0], "head id");
        t.r = parse_int(fields[1], "relation id");
        t.t = parse_int(fields[2], "tail id");
        t.p = parse_double(fields[3], "probability");
        t.cooccurrence_count = parse_int64(fields[4], "cooccurrence count");
        t.head_count = parse_int64(fields[5], "head count");
        triplets.push_back(t);
    }
    return triplets;
}

void write_hierarchy_tsv(const std::filesystem::path& path, const DiseaseHierarchy& hierarchy) {
    std::ofstream out = open_out(path);
    for (const auto& [child, parent] : hierarchy.edges()) {
        out << child << '\t' << parent << '\n';
    }
}

DiseaseHierarchy read_hierarchy_tsv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    DiseaseHierarchy hierarchy;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_tsv_line(line);
        if (fields.size() != 2) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                              ": expected 2 tab-separated fields");
        }
        hierarchy.add_edge(parse_int(fields[0], "child id"), parse_int(fields[1], "parent id"));
    }
    return hierarchy;
}

void write_split_json(const std::filesystem::path& path, const DataSplit& split, int top_k) {
    ordered_json doc;
    doc["seed"] = split.seed;
    doc["test_fraction"] = split.test_fraction;
    doc["stratified"] = split.stratified;
    doc["top_k"] = top_k;
    auto keys_to_json = [](const std::vector<GroupKey>& keys) {
        ordered_json array = ordered_json::array();
        for (GroupKey key : keys) array.push_back({key.h, key.r});
        return array;
    };
    doc["train_groups"] = keys_to_json(split.train_groups);
    doc["test_groups"] = keys_to_json(split.test_groups);
    std::ofstream out = open_out(path);
    out << doc.dump(2) << '\n';
}

std::pair<DataSplit, int> read_split_json(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    ordered_json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.string() + ": invalid JSON: " + e.what());
    }
    DataSplit split;
    int top_k = 0;
    try {
        split.seed = doc.at("seed").get<std::uint64_t>();
        split.test_fraction = doc.at("test_fraction").get<double>();
        split.stratified = doc.at("stratified").get<bool>();
        top_k = doc.at("top_k").get<int>();
        auto parse_keys = [](const ordered_json& array) {
            std::vector<GroupKey> keys;
            for (const auto& item : array) {
                keys.push_back({item.at(0).get<int>(), item.at(1).get<int>()});
            }
            return keys;
        };
        split.train_groups = parse_keys(doc.at("train_groups"));
        split.test_groups = parse_keys(doc.at("test_groups"));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.string() + ": missing or malformed field: " + e.what());
    }
    return {std::move(split), top_k};
}

}  // namespace prtransx
