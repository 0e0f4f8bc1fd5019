#include "ecfc/config_io.hpp"

#include <algorithm>
#include <set>

#include "ecfc/error.hpp"

namespace ecfc {

namespace {

const std::set<std::string> kConfigKeys = {
    "batch_size",  "epochs",     "learning_rate", "dropout_keep", "window_size", "layer_count",
    "units",       "schema",     "input_mode",    "seed",         "shuffle",     "clip_norm",
    "split",       "adam_beta1", "adam_beta2",    "adam_epsilon", "zero_floor"};

template <typename T>
void read(const Json& doc, const char* key, T& out) {
    if (!doc.contains(key)) return;
    try {
        out = doc.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

std::size_t read_count(const Json& doc, const char* key, std::size_t fallback) {
    if (!doc.contains(key)) return fallback;
    const auto& v = doc.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
        throw ConfigError(std::string("config key '") + key + "' must be a nonnegative integer");
    }
    return v.get<std::size_t>();
}

TrainConfig parse_config(const Json& doc, std::initializer_list<std::string> extra_keys);

}  // namespace

Json to_json(const TrainConfig& c) {
    Json j;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["learning_rate"] = c.learning_rate;
    j["dropout_keep"] = c.dropout_keep;
    j["window_size"] = c.schema.window;
    j["layer_count"] = c.layer_count;
    j["units"] = c.units;
    j["schema"] = to_string(c.schema.kind);
    j["input_mode"] = to_string(c.schema.mode);
    j["seed"] = c.seed;
    j["shuffle"] = c.shuffle;
    j["clip_norm"] = c.clip_norm ? Json(*c.clip_norm) : Json(nullptr);
    j["split"] = {{"train_start", c.split.train_start}, {"train_len", c.split.train_len}, {"val_end", c.split.val_end}};
    j["adam_beta1"] = c.adam_beta1;
    j["adam_beta2"] = c.adam_beta2;
    j["adam_epsilon"] = c.adam_epsilon;
    j["zero_floor"] = c.zero_floor;
    return j;
}

TrainConfig train_config_from_json(const Json& doc, std::initializer_list<std::string> extra_keys) {
    try {
        return parse_config(doc, extra_keys);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

namespace {

TrainConfig parse_config(const Json& doc, std::initializer_list<std::string> extra_keys) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& item : doc.items()) {
        const bool extra = std::find(extra_keys.begin(), extra_keys.end(), item.key()) != extra_keys.end();
        if (!kConfigKeys.count(item.key()) && !extra) throw ConfigError("unknown config key '" + item.key() + "'");
    }
    TrainConfig c;
    c.batch_size = read_count(doc, "batch_size", c.batch_size);
    c.epochs = read_count(doc, "epochs", c.epochs);
    read(doc, "learning_rate", c.learning_rate);
    read(doc, "dropout_keep", c.dropout_keep);
    c.layer_count = read_count(doc, "layer_count", c.layer_count);
    c.units = read_count(doc, "units", c.units);
    if (doc.contains("schema")) c.schema.kind = schema_kind_from_string(doc.at("schema").get<std::string>());
    if (doc.contains("input_mode")) c.schema.mode = input_mode_from_string(doc.at("input_mode").get<std::string>());
    c.schema.window = c.schema.kind == SchemaKind::Windowed ? read_count(doc, "window_size", c.schema.window) : 0;
    if (doc.contains("seed")) {
        const auto& s = doc.at("seed");
        if (!s.is_number_unsigned()) throw ConfigError("config key 'seed' must be an unsigned integer");
        c.seed = s.get<std::uint64_t>();
    }
    read(doc, "shuffle", c.shuffle);
    if (doc.contains("clip_norm")) {
        const auto& v = doc.at("clip_norm");
        if (v.is_null()) {
            c.clip_norm.reset();
        } else if (v.is_number()) {
            c.clip_norm = v.get<double>();
        } else {
            throw ConfigError("config key 'clip_norm' must be a number or null");
        }
    }
    if (doc.contains("split")) {
        const auto& s = doc.at("split");
        if (!s.is_object()) throw ConfigError("config key 'split' must be an object");
        for (const auto& item : s.items()) {
            if (item.key() != "train_start" && item.key() != "train_len" && item.key() != "val_end") {
                throw ConfigError("unknown split key '" + item.key() + "'");
            }
        }
        c.split.train_start = read_count(s, "train_start", c.split.train_start);
        c.split.train_len = read_count(s, "train_len", c.split.train_len);
        c.split.val_end = read_count(s, "val_end", c.split.val_end);
    }
    read(doc, "adam_beta1", c.adam_beta1);
    read(doc, "adam_beta2", c.adam_beta2);
    read(doc, "adam_epsilon", c.adam_epsilon);
    read(doc, "zero_floor", c.zero_floor);
    return c;
}

}  // namespace

Json to_json(const Normalizer& n) {
    Json calendar = Json::array();
    for (const auto& mm : n.calendar) calendar.push_back({mm.min, mm.max});
    return {{"calendar", calendar}, {"target", {n.target.min, n.target.max}}};
}

Normalizer normalizer_from_json(const Json& doc) {
    Normalizer n;
    for (const auto& pair : doc.at("calendar")) n.calendar.push_back({pair.at(0).get<double>(), pair.at(1).get<double>()});
    n.target = {doc.at("target").at(0).get<double>(), doc.at("target").at(1).get<double>()};
    return n;
}

Json to_json(const EpochRecord& r) {
    return {{"epoch", r.epoch},
            {"train_mae_kwh", r.train_mae},
            {"val_mae_kwh", r.val_mae},
            {"val_mape_pct", r.val_mape}};
}

EpochRecord epoch_record_from_json(const Json& doc) {
    return {doc.at("epoch").get<std::size_t>(), doc.at("train_mae_kwh").get<double>(),
            doc.at("val_mae_kwh").get<double>(), doc.at("val_mape_pct").get<double>()};
}

}  // namespace ecfc
