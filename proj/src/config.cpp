#include "prtransx/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace prtransx {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream stream(value);
    std::string item;
    while (std::getline(stream, item, ',')) items.push_back(trim(item));
    return items;
}

double parse_double_value(const std::string& key, const std::string& value) {
    if (value == "inf" || value == "infinity") return std::numeric_limits<double>::infinity();
    try {
        std::size_t consumed = 0;
        const double parsed = std::stod(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

std::int64_t parse_int_value(const std::string& key, const std::string& value) {
    try {
        std::size_t consumed = 0;
        const std::int64_t parsed = std::stoll(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
    }
}

bool parse_bool_value(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

std::string format_double(double v) {
    if (std::isinf(v)) return "inf";
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

struct Field {
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

std::vector<Field> schema() {
    std::vector<Field> fields;
    auto add = [&fields](std::string key, auto set, auto get) {
        fields.push_back({std::move(key), set, get});
    };
    auto add_int = [&add](const std::string& key, auto member) {
        add(key,
            [key, member](RunConfig& c, const std::string& v) {
                member(c) = static_cast<std::decay_t<decltype(member(c))>>(parse_int_value(key, v));
            },
            [member](const RunConfig& c) {
                return std::to_string(member(const_cast<RunConfig&>(c)));
            });
    };
    auto add_double = [&add](const std::string& key, auto member) {
        add(key,
            [key, member](RunConfig& c, const std::string& v) { member(c) = parse_double_value(key, v); },
            [member](const RunConfig& c) { return format_double(member(const_cast<RunConfig&>(c))); });
    };
    auto add_bool = [&add](const std::string& key, auto member) {
        add(key,
            [key, member](RunConfig& c, const std::string& v) { member(c) = parse_bool_value(key, v); },
            [member](const RunConfig& c) {
                return member(const_cast<RunConfig&>(c)) ? std::string("true") : std::string("false");
            });
    };
    auto add_weights = [&add](const std::string& key, auto member) {
        add(key,
            [key, member](RunConfig& c, const std::string& v) {
                std::vector<double> weights;
                for (const std::string& item : split_list(v)) {
                    weights.push_back(parse_double_value(key, item));
                }
                member(c) = std::move(weights);
            },
            [member](const RunConfig& c) {
                std::string out;
                for (double w : member(const_cast<RunConfig&>(c))) {
                    if (!out.empty()) out += ",";
                    out += format_double(w);
                }
                return out;
            });
    };

    // world.*
    add_int("world.seed", [](RunConfig& c) -> std::uint64_t& { return c.world.seed; });
    add_int("world.chapters", [](RunConfig& c) -> int& { return c.world.diseases.chapters; });
    add_int("world.categories_per_chapter",
            [](RunConfig& c) -> int& { return c.world.diseases.categories_per_chapter; });
    add_int("world.subcategories_per_category",
            [](RunConfig& c) -> int& { return c.world.diseases.subcategories_per_category; });
    for (int i = 1; i < kEntityTypeCount; ++i) {
        add_int("world." + std::string(to_string(static_cast<EntityType>(i))) + "_count",
                [i](RunConfig& c) -> int& { return c.world.entity_counts[static_cast<std::size_t>(i)]; });
    }
    add("world.fan_out",
        [](RunConfig& c, const std::string& v) {
            auto parse_range = [&v](const std::string& item) {
                const auto colon = item.find(':');
                if (colon == std::string::npos) {
                    throw ConfigError("config key 'world.fan_out': expected min:max, got '" + item + "'");
                }
                FanOutRange range;
                range.min_tails = static_cast<int>(parse_int_value("world.fan_out", item.substr(0, colon)));
                range.max_tails = static_cast<int>(parse_int_value("world.fan_out", item.substr(colon + 1)));
                return range;
            };
            const auto items = split_list(v);
            if (items.size() == 1) {
                c.world.fan_out.fill(parse_range(items[0]));
            } else if (items.size() == c.world.fan_out.size()) {
                for (std::size_t i = 0; i < items.size(); ++i) {
                    c.world.fan_out[i] = parse_range(items[i]);
                }
            } else {
                throw ConfigError("config key 'world.fan_out': expected 1 or 5 min:max ranges");
            }
        },
        [](const RunConfig& c) {
            std::string out;
            for (const FanOutRange& range : c.world.fan_out) {
                if (!out.empty()) out += ",";
                out += std::to_string(range.min_tails) + ":" + std::to_string(range.max_tails);
            }
            return out;
        });
    add_double("world.planted_p_min", [](RunConfig& c) -> double& { return c.world.planted.p_min; });
    add_double("world.planted_p_max", [](RunConfig& c) -> double& { return c.world.planted.p_max; });
    add_double("world.planted_shape", [](RunConfig& c) -> double& { return c.world.planted.shape; });
    add_int("world.visits", [](RunConfig& c) -> std::int64_t& { return c.visits; });

    // split.*
    add_double("split.test_fraction", [](RunConfig& c) -> double& { return c.test_fraction; });
    add_int("split.seed", [](RunConfig& c) -> std::uint64_t& { return c.split_seed; });
    add_bool("split.stratified", [](RunConfig& c) -> bool& { return c.stratified; });
    add_int("split.top_k", [](RunConfig& c) -> int& { return c.top_k; });

    // train.*
    add("train.objective",
        [](RunConfig& c, const std::string& v) { c.train.objective = objective_from_string(v); },
        [](const RunConfig& c) { return std::string(to_string(c.train.objective)); });
    add("train.model",
        [](RunConfig& c, const std::string& v) { c.train.kind.variant = model_variant_from_string(v); },
        [](const RunConfig& c) { return std::string(to_string(c.train.kind.variant)); });
    add("train.distance_norm",
        [](RunConfig& c, const std::string& v) { c.train.kind.norm = distance_norm_from_string(v); },
        [](const RunConfig& c) { return std::string(to_string(c.train.kind.norm)); });
    add_int("train.dim", [](RunConfig& c) -> int& { return c.train.dim_entity; });
    add_int("train.dim_relation", [](RunConfig& c) -> int& { return c.train.dim_relation; });
    add_int("train.epochs", [](RunConfig& c) -> int& { return c.train.epochs; });
    add_double("train.learning_rate", [](RunConfig& c) -> double& { return c.train.learning_rate; });
    add_int("train.batch_size", [](RunConfig& c) -> int& { return c.train.batch_size; });
    add_int("train.negatives_per_positive",
            [](RunConfig& c) -> int& { return c.train.negatives_per_positive; });
    add_int("train.seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; });
    add_bool("train.detach_weight", [](RunConfig& c) -> bool& { return c.train.detach_weight; });
    add_double("train.update_weight_cap",
               [](RunConfig& c) -> double& { return c.train.update_weight_exponent_cap; });
    add_double("train.theta_min", [](RunConfig& c) -> double& { return c.train.theta_min; });
    add_int("train.max_sampling_retries",
            [](RunConfig& c) -> int& { return c.train.max_sampling_retries; });
    add_int("train.checkpoint_every", [](RunConfig& c) -> int& { return c.train.checkpoint_every; });
    add_bool("train.filter_with_test", [](RunConfig& c) -> bool& { return c.train.filter_with_test; });

    // loss.*
    add_double("loss.lambda", [](RunConfig& c) -> double& { return c.train.hyper.lambda; });
    add_double("loss.k", [](RunConfig& c) -> double& { return c.train.hyper.margin_weight_scale; });
    add_double("loss.gamma", [](RunConfig& c) -> double& { return c.train.hyper.gamma; });
    add_double("loss.eps_p", [](RunConfig& c) -> double& { return c.train.hyper.eps_p; });
    add_double("loss.eps_n", [](RunConfig& c) -> double& { return c.train.hyper.eps_n; });
    add_weights("loss.alpha", [](RunConfig& c) -> std::vector<double>& { return c.train.hyper.alpha; });
    add_weights("loss.beta", [](RunConfig& c) -> std::vector<double>& { return c.train.hyper.beta; });
    add_double("loss.weight_cap",
               [](RunConfig& c) -> double& { return c.train.hyper.weight_exponent_cap; });
    add_bool("loss.add_margin_term",
             [](RunConfig& c) -> bool& { return c.train.hyper.add_margin_term; });

    // eval.*
    add_int("eval.k", [](RunConfig& c) -> int& { return c.eval.k; });
    add_bool("eval.filtered", [](RunConfig& c) -> bool& { return c.eval.filtered; });
    add_double("eval.t_strong", [](RunConfig& c) -> double& { return c.thresholds.strongly; });
    add_double("eval.t_related", [](RunConfig& c) -> double& { return c.thresholds.related; });
    add_double("eval.t_weak", [](RunConfig& c) -> double& { return c.thresholds.weakly; });
    return fields;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, RunConfig base) {
    const auto fields = schema();
    std::istringstream stream(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = std::find_if(fields.begin(), fields.end(),
                                     [&key](const Field& field) { return field.key == key; });
        if (it == fields.end()) {
            throw ConfigError("unknown config key '" + key + "' (line " + std::to_string(line_no) + ")");
        }
        it->set(base, value);
    }
    // eval.lambda mirrors the loss mapping coefficient.
    base.eval.lambda = base.train.hyper.lambda;
    return base;
}

RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open config file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text, std::move(base));
}

std::string dump_config(const RunConfig& config) {
    std::string out;
    for (const Field& field : schema()) {
        out += field.key;
        out += " = ";
        out += field.get(config);
        out += "\n";
    }
    return out;
}

}  // namespace prtransx
