#include "prtransx/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "prtransx/io.hpp"
#include "prtransx/rng.hpp"

namespace prtransx {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kProfileStream = 0x9F0F11E5ULL;
constexpr std::uint64_t kVisitStream = 0x7151717ULL;

std::string chapter_code(int index) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%c%02d", 'A' + (index % 26), index % 100);
    return buf;
}

std::string type_code(EntityType type, int ordinal) {
    static constexpr const char* kPrefix[kEntityTypeCount] = {"DIS", "SYM", "MED", "OPR", "LAB", "EXM"};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%s%04d", kPrefix[static_cast<int>(type)], ordinal);
    return buf;
}

double bounded_pareto(Rng& rng, const PlantedDistribution& dist) {
    const double u = uniform_01(rng);
    const double ratio = std::pow(dist.p_min / dist.p_max, dist.shape);
    const double x = dist.p_min / std::pow(1.0 - u * (1.0 - ratio), 1.0 / dist.shape);
    return std::clamp(x, dist.p_min, dist.p_max);
}

std::vector<int> sample_distinct(const std::vector<int>& pool, int n, Rng& rng) {
    std::vector<int> copy = pool;
    n = std::min<int>(n, static_cast<int>(copy.size()));
    for (int i = 0; i < n; ++i) {
        const auto j = i + uniform_index(rng, static_cast<std::int64_t>(copy.size()) - i);
        std::swap(copy[static_cast<std::size_t>(i)], copy[static_cast<std::size_t>(j)]);
    }
    copy.resize(static_cast<std::size_t>(n));
    std::sort(copy.begin(), copy.end());
    return copy;
}

std::uint64_t pack_hrt(int h, int r, int t) {
    return (static_cast<std::uint64_t>(h) << 40) | (static_cast<std::uint64_t>(r) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(t));
}

void unpack_hrt(std::uint64_t key, int& h, int& r, int& t) {
    h = static_cast<int>(key >> 40);
    r = static_cast<int>((key >> 32) & 0xFF);
    t = static_cast<int>(key & 0xFFFFFFFFULL);
}

}  // namespace

int WorldConfig::leaf_disease_count() const {
    return diseases.chapters * diseases.categories_per_chapter * diseases.subcategories_per_category;
}

int WorldConfig::total_disease_count() const {
    const int chapters = diseases.chapters;
    const int categories = chapters * diseases.categories_per_chapter;
    return chapters + categories + categories * diseases.subcategories_per_category;
}

void WorldConfig::validate() const {
    if (diseases.chapters < 1 || diseases.chapters > 1300) {
        throw ConfigError("world.chapters must be in [1, 1300]");
    }
    if (diseases.categories_per_chapter < 1 || diseases.categories_per_chapter > 10) {
        throw ConfigError("world.categories_per_chapter must be in [1, 10]");
    }
    if (diseases.subcategories_per_category < 1 || diseases.subcategories_per_category > 100) {
        throw ConfigError("world.subcategories_per_category must be in [1, 100]");
    }
    for (int i = 1; i < kEntityTypeCount; ++i) {
        if (entity_counts[static_cast<std::size_t>(i)] < 1) {
            throw ConfigError(std::string("world.") +
                              std::string(to_string(static_cast<EntityType>(i))) +
                              "_count must be >= 1");
        }
    }
    for (const FanOutRange& range : fan_out) {
        if (range.min_tails < 1 || range.max_tails < range.min_tails) {
            throw ConfigError("world.fan_out ranges require 1 <= min <= max");
        }
    }
    if (!(planted.p_min > 0.0 && planted.p_min < planted.p_max && planted.p_max <= 1.0)) {
        throw ConfigError("world.planted requires 0 < p_min < p_max <= 1");
    }
    if (!(planted.shape > 0.0)) throw ConfigError("world.planted_shape must be > 0");
}

World generate_world(const WorldConfig& config) {
    config.validate();
    World world;
    world.config = config;
    world.relations = standard_relations();

    std::vector<Entity> entities;
    entities.reserve(static_cast<std::size_t>(config.total_disease_count()));

    // Diseases level by level: chapters, categories, subcategories (leaves).
    std::vector<int> chapter_ids, category_ids;
    std::vector<std::string> category_codes;
    for (int c = 0; c < config.diseases.chapters; ++c) {
        const int id = static_cast<int>(entities.size());
        entities.push_back({id, EntityType::disease, chapter_code(c)});
        chapter_ids.push_back(id);
    }
    for (int c = 0; c < config.diseases.chapters; ++c) {
        for (int j = 0; j < config.diseases.categories_per_chapter; ++j) {
            const int id = static_cast<int>(entities.size());
            std::string code = entities[static_cast<std::size_t>(chapter_ids[static_cast<std::size_t>(c)])].code +
                               "." + std::to_string(j);
            entities.push_back({id, EntityType::disease, code});
            category_ids.push_back(id);
            category_codes.push_back(std::move(code));
            world.hierarchy.add_edge(id, chapter_ids[static_cast<std::size_t>(c)]);
        }
    }
    for (std::size_t cat = 0; cat < category_ids.size(); ++cat) {
        for (int s = 0; s < config.diseases.subcategories_per_category; ++s) {
            const int id = static_cast<int>(entities.size());
            char suffix[16];
            std::snprintf(suffix, sizeof(suffix), "%02d", s);
            entities.push_back({id, EntityType::disease, category_codes[cat] + suffix});
            world.leaf_diseases.push_back(id);
            world.hierarchy.add_edge(id, category_ids[cat]);
        }
    }

    for (int type_index = 1; type_index < kEntityTypeCount; ++type_index) {
        const auto type = static_cast<EntityType>(type_index);
        for (int i = 0; i < config.entity_counts[static_cast<std::size_t>(type_index)]; ++i) {
            const int id = static_cast<int>(entities.size());
            entities.push_back({id, type, type_code(type, i)});
        }
    }
    world.catalog = EntityCatalog(std::move(entities));

    // Planted conditionals, one rng stream in a fixed iteration order.
    Rng rng(derive_seed(config.seed, kProfileStream));
    for (int leaf : world.leaf_diseases) {
        for (int rel = 0; rel < 5; ++rel) {
            const Relation& relation = world.relations[static_cast<std::size_t>(rel)];
            const std::vector<int>& pool = world.catalog.of_type(relation.tail_type);
            const FanOutRange& range = config.fan_out[static_cast<std::size_t>(rel)];
            const int n = static_cast<int>(
                uniform_index(rng, range.max_tails - range.min_tails + 1) + range.min_tails);
            std::vector<int> tails = sample_distinct(pool, n, rng);
            std::vector<TailEntry> planted;
            planted.reserve(tails.size());
            for (int tail : tails) planted.push_back({tail, bounded_pareto(rng, config.planted)});
            world.profile.tails[{leaf, rel}] = std::move(planted);
        }
    }
    return world;
}

std::vector<VisitRecord> sample_visits(const World& world, std::int64_t n_visits,
                                       std::uint64_t seed, int workers) {
    if (world.leaf_diseases.empty()) throw ConfigError("world has no leaf diseases");
    if (n_visits < 0) throw ConfigError("visit count must be >= 0");
    std::vector<VisitRecord> visits(static_cast<std::size_t>(n_visits));

    auto fill_range = [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t v = begin; v < end; ++v) {
            // Per-visit seed: the output is identical for any worker layout.
            Rng rng(derive_seed(seed, kVisitStream, static_cast<std::uint64_t>(v)));
            VisitRecord& visit = visits[static_cast<std::size_t>(v)];
            visit.visit_id = v;
            visit.primary_disease = world.leaf_diseases[static_cast<std::size_t>(
                uniform_index(rng, static_cast<std::int64_t>(world.leaf_diseases.size())))];
            for (int rel = 0; rel < 5; ++rel) {
                auto it = world.profile.tails.find({visit.primary_disease, rel});
                if (it == world.profile.tails.end()) continue;
                const EntityType tail_type = world.relations[static_cast<std::size_t>(rel)].tail_type;
                for (const TailEntry& entry : it->second) {
                    if (uniform_01(rng) < entry.p) visit.observed.push_back({tail_type, entry.tail});
                }
            }
            std::sort(visit.observed.begin(), visit.observed.end(),
                      [](const Observation& a, const Observation& b) {
                          if (a.type != b.type) return a.type < b.type;
                          return a.entity < b.entity;
                      });
        }
    };

    workers = std::max(1, workers);
    if (workers == 1 || n_visits < 2) {
        fill_range(0, n_visits);
    } else {
        std::vector<std::thread> threads;
        const std::int64_t chunk = (n_visits + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::int64_t begin = w * chunk;
            const std::int64_t end = std::min<std::int64_t>(begin + chunk, n_visits);
            if (begin >= end) break;
            threads.emplace_back(fill_range, begin, end);
        }
        for (std::thread& thread : threads) thread.join();
    }
    return visits;
}

std::vector<ProbTriplet> extract_triplets(std::span<const VisitRecord> visits,
                                          const EntityCatalog& catalog,
                                          const DiseaseHierarchy& hierarchy) {
    std::unordered_map<int, std::int64_t> holds;          // N_h
    std::unordered_map<std::uint64_t, std::int64_t> pair_counts;  // N_(h,r,t)

    for (const VisitRecord& visit : visits) {
        auto visit_error = [&](const std::string& what) {
            return ExtractionError("visit " + std::to_string(visit.visit_id) + ": " + what);
        };
        if (!catalog.contains(visit.primary_disease) ||
            catalog.at(visit.primary_disease).type != EntityType::disease) {
            throw visit_error("unknown primary disease id " + std::to_string(visit.primary_disease));
        }
        std::vector<int> lineage{visit.primary_disease};
        for (int ancestor : hierarchy.ancestors(visit.primary_disease)) lineage.push_back(ancestor);
        for (int holder : lineage) ++holds[holder];

        for (const Observation& obs : visit.observed) {
            if (!catalog.contains(obs.entity) || catalog.at(obs.entity).type != obs.type) {
                throw visit_error("unknown entity " + std::to_string(obs.entity) + " of type " +
                                  std::string(to_string(obs.type)));
            }
            const auto rel = relation_for_tail_type(obs.type);
            if (!rel) throw visit_error("observation of disease type has no statistical relation");
            for (int holder : lineage) ++pair_counts[pack_hrt(holder, *rel, obs.entity)];
        }
    }

    std::vector<ProbTriplet> triplets;
    triplets.reserve(pair_counts.size() + hierarchy.edge_count());
    for (const auto& [key, count] : pair_counts) {
        ProbTriplet t;
        unpack_hrt(key, t.h, t.r, t.t);
        t.cooccurrence_count = count;
        t.head_count = holds.at(t.h);
        t.p = static_cast<double>(count) / static_cast<double>(t.head_count);
        triplets.push_back(t);
    }
    for (const auto& [child, parent] : hierarchy.edges()) {
        triplets.push_back({parent, kUpperToLowerDisease, child, 1.0, 1, 1});
    }
    std::sort(triplets.begin(), triplets.end(), [](const ProbTriplet& a, const ProbTriplet& b) {
        if (a.h != b.h) return a.h < b.h;
        if (a.r != b.r) return a.r < b.r;
        return a.t < b.t;
    });
    return triplets;
}

std::vector<GroundTruthLabel> derive_ground_truth(const World& world,
                                                  const RelevanceThresholds& thresholds) {
    if (!(thresholds.strongly > thresholds.related && thresholds.related > thresholds.weakly &&
          thresholds.weakly > 0.0)) {
        throw ConfigError("relevance thresholds must satisfy strongly > related > weakly > 0");
    }
    std::vector<GroundTruthLabel> labels;
    for (const auto& [key, tails] : world.profile.tails) {
        for (const TailEntry& entry : tails) {
            int relevance = 0;
            if (entry.p >= thresholds.strongly) {
                relevance = 3;
            } else if (entry.p >= thresholds.related) {
                relevance = 2;
            } else if (entry.p >= thresholds.weakly) {
                relevance = 1;
            }
            if (relevance > 0) labels.push_back({key.first, key.second, entry.tail, relevance});
        }
    }
    return labels;
}

std::optional<double> planted_probability(const World& world, int h, int r, int t) {
    if (r == kUpperToLowerDisease) {
        const auto parent = world.hierarchy.parent(t);
        if (parent && *parent == h) return 1.0;
        return std::nullopt;
    }
    // Leaves under h (h itself when a leaf).
    std::vector<int> leaves;
    for (int leaf : world.leaf_diseases) {
        if (leaf == h) {
            leaves.push_back(leaf);
            continue;
        }
        const auto chain = world.hierarchy.ancestors(leaf);
        if (std::find(chain.begin(), chain.end(), h) != chain.end()) leaves.push_back(leaf);
    }
    if (leaves.empty()) return std::nullopt;
    double sum = 0.0;
    bool any = false;
    for (int leaf : leaves) {
        auto it = world.profile.tails.find({leaf, r});
        if (it == world.profile.tails.end()) continue;
        for (const TailEntry& entry : it->second) {
            if (entry.tail == t) {
                sum += entry.p;
                any = true;
                break;
            }
        }
    }
    if (!any) return std::nullopt;
    return sum / static_cast<double>(leaves.size());
}

void write_visits_tsv(const std::filesystem::path& path, std::span<const VisitRecord> visits) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingInputError("cannot open for writing: " + path.string());
    for (const VisitRecord& visit : visits) {
        out << visit.visit_id << '\t' << visit.primary_disease << '\t';
        for (std::size_t i = 0; i < visit.observed.size(); ++i) {
            if (i) out << ';';
            out << to_string(visit.observed[i].type) << ':' << visit.observed[i].entity;
        }
        out << '\n';
    }
}

std::vector<VisitRecord> read_visits_tsv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open for reading: " + path.string());
    std::vector<VisitRecord> visits;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_tsv_line(line);
        if (fields.size() != 3) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                              ": expected 3 tab-separated fields");
        }
        VisitRecord visit;
        try {
            visit.visit_id = std::stoll(fields[0]);
            visit.primary_disease = std::stoi(fields[1]);
        } catch (const std::exception&) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": bad visit ids");
        }
        if (!fields[2].empty()) {
            std::size_t start = 0;
            while (start <= fields[2].size()) {
                std::size_t semi = fields[2].find(';', start);
                if (semi == std::string::npos) semi = fields[2].size();
                const std::string token = fields[2].substr(start, semi - start);
                const std::size_t colon = token.find(':');
                if (colon == std::string::npos) {
                    throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                                      ": bad observation token '" + token + "'");
                }
                Observation obs;
                obs.type = entity_type_from_string(token.substr(0, colon));
                try {
                    obs.entity = std::stoi(token.substr(colon + 1));
                } catch (const std::exception&) {
                    throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                                      ": bad observation id in '" + token + "'");
                }
                visit.observed.push_back(obs);
                if (semi == fields[2].size()) break;
                start = semi + 1;
            }
        }
        visits.push_back(std::move(visit));
    }
    return visits;
}

namespace {

ordered_json world_config_to_json(const WorldConfig& config) {
    ordered_json doc;
    doc["seed"] = config.seed;
    doc["chapters"] = config.diseases.chapters;
    doc["categories_per_chapter"] = config.diseases.categories_per_chapter;
    doc["subcategories_per_category"] = config.diseases.subcategories_per_category;
    for (int i = 1; i < kEntityTypeCount; ++i) {
        doc[std::string(to_string(static_cast<EntityType>(i))) + "_count"] =
            config.entity_counts[static_cast<std::size_t>(i)];
    }
    ordered_json fans = ordered_json::array();
    for (const FanOutRange& range : config.fan_out) {
        fans.push_back({range.min_tails, range.max_tails});
    }
    doc["fan_out"] = fans;
    doc["planted_p_min"] = config.planted.p_min;
    doc["planted_p_max"] = config.planted.p_max;
    doc["planted_shape"] = config.planted.shape;
    return doc;
}

WorldConfig world_config_from_json(const ordered_json& doc) {
    WorldConfig config;
    config.seed = doc.at("seed").get<std::uint64_t>();
    config.diseases.chapters = doc.at("chapters").get<int>();
    config.diseases.categories_per_chapter = doc.at("categories_per_chapter").get<int>();
    config.diseases.subcategories_per_category = doc.at("subcategories_per_category").get<int>();
    for (int i = 1; i < kEntityTypeCount; ++i) {
        config.entity_counts[static_cast<std::size_t>(i)] =
            doc.at(std::string(to_string(static_cast<EntityType>(i))) + "_count").get<int>();
    }
    const auto& fans = doc.at("fan_out");
    for (std::size_t i = 0; i < config.fan_out.size(); ++i) {
        config.fan_out[i].min_tails = fans.at(i).at(0).get<int>();
        config.fan_out[i].max_tails = fans.at(i).at(1).get<int>();
    }
    config.planted.p_min = doc.at("planted_p_min").get<double>();
    config.planted.p_max = doc.at("planted_p_max").get<double>();
    config.planted.shape = doc.at("planted_shape").get<double>();
    return config;
}

}  // namespace

void write_world_json(const std::filesystem::path& path, const World& world) {
    ordered_json doc;
    doc["config"] = world_config_to_json(world.config);
    ordered_json entities = ordered_json::array();
    for (const Entity& entity : world.catalog.entities()) {
        entities.push_back({entity.id, std::string(to_string(entity.type)), entity.code});
    }
    doc["entities"] = entities;
    ordered_json edges = ordered_json::array();
    for (const auto& [child, parent] : world.hierarchy.edges()) edges.push_back({child, parent});
    doc["hierarchy"] = edges;
    doc["leaf_diseases"] = world.leaf_diseases;
    ordered_json profile = ordered_json::array();
    for (const auto& [key, tails] : world.profile.tails) {
        ordered_json entry;
        entry["h"] = key.first;
        entry["r"] = key.second;
        ordered_json tail_list = ordered_json::array();
        for (const TailEntry& tail : tails) tail_list.push_back({tail.tail, tail.p});
        entry["tails"] = tail_list;
        profile.push_back(std::move(entry));
    }
    doc["planted_profile"] = profile;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingInputError("cannot open for writing: " + path.string());
    out << doc.dump(2) << '\n';
}

World read_world_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open for reading: " + path.string());
    ordered_json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.string() + ": invalid JSON: " + e.what());
    }
    World world;
    try {
        world.config = world_config_from_json(doc.at("config"));
        world.relations = standard_relations();
        std::vector<Entity> entities;
        for (const auto& item : doc.at("entities")) {
            entities.push_back({item.at(0).get<int>(),
                                entity_type_from_string(item.at(1).get<std::string>()),
                                item.at(2).get<std::string>()});
        }
        world.catalog = EntityCatalog(std::move(entities));
        for (const auto& edge : doc.at("hierarchy")) {
            world.hierarchy.add_edge(edge.at(0).get<int>(), edge.at(1).get<int>());
        }
        world.leaf_diseases = doc.at("leaf_diseases").get<std::vector<int>>();
        for (const auto& entry : doc.at("planted_profile")) {
            std::vector<TailEntry> tails;
            for (const auto& tail : entry.at("tails")) {
                tails.push_back({tail.at(0).get<int>(), tail.at(1).get<double>()});
            }
            world.profile.tails[{entry.at("h").get<int>(), entry.at("r").get<int>()}] = std::move(tails);
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.string() + ": missing or malformed field: " + e.what());
    }
    return world;
}

}  // namespace prtransx
