#include "fer/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

namespace fer {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    return msg;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

bool is_blank(std::string_view text) {
    return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "initial_lr",    "momentum",     "batch_size",  "weight_decay", "max_epochs",        "plateau_patience",
        "lr_factor",     "dropout_rate", "global_seed", "pad",          "mirror_probability"};
    return keys;
}

std::string suggest_key(std::string_view unknown) {
    // common spellings from other trainers; only used for hints, never accepted
    static const std::vector<std::pair<std::string, std::string>> aliases = {
        {"learning_rate", "initial_lr"}, {"lr", "initial_lr"},           {"base_lr", "initial_lr"},
        {"seed", "global_seed"},         {"epochs", "max_epochs"},       {"patience", "plateau_patience"},
        {"dropout", "dropout_rate"},     {"decay", "weight_decay"},      {"batch", "batch_size"},
        {"mirror", "mirror_probability"}, {"padding", "pad"},            {"gamma", "lr_factor"}};
    std::string best;
    std::size_t best_d = std::string::npos;
    auto consider = [&](std::string_view candidate, const std::string& key) {
        const auto d = edit_distance(unknown, candidate);
        if (d < best_d) {
            best_d = d;
            best = key;
        }
    };
    for (const auto& k : config_keys()) consider(k, k);
    for (const auto& [alias, key] : aliases) consider(alias, key);
    return best_d <= std::max<std::size_t>(2, unknown.size() / 3) ? best : std::string{};
}

std::vector<std::string> check_ranges(const TrainConfig& c) {
    std::vector<std::string> p;
    if (!(c.initial_lr > 0.0)) p.push_back("initial_lr: must be > 0");
    if (!(c.momentum >= 0.0 && c.momentum < 1.0)) p.push_back("momentum: must lie in [0, 1)");
    if (c.batch_size < 1) p.push_back("batch_size: must be >= 1");
    if (!(c.weight_decay >= 0.0)) p.push_back("weight_decay: must be >= 0");
    if (c.max_epochs < 1) p.push_back("max_epochs: must be >= 1");
    if (c.plateau_patience < 1) p.push_back("plateau_patience: must be >= 1");
    if (!(c.lr_factor > 0.0 && c.lr_factor < 1.0)) p.push_back("lr_factor: must lie in (0, 1)");
    if (!(c.dropout_rate >= 0.0 && c.dropout_rate < 1.0)) p.push_back("dropout_rate: must lie in [0, 1)");
    if (c.pad < 0) p.push_back("pad: must be >= 0");
    if (!(c.mirror_probability >= 0.0 && c.mirror_probability <= 1.0))
        p.push_back("mirror_probability: must lie in [0, 1]");
    return p;
}

TrainConfig validate_config(std::string_view text) {
    TrainConfig cfg;
    if (is_blank(text)) return cfg;

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({std::string("not valid JSON: ") + e.what()});
    }
    if (!doc.is_object()) throw ConfigError({"top level must be a JSON object"});

    std::vector<std::string> problems;
    auto read_real = [&](const nlohmann::json& v, const std::string& key, double& out) {
        if (!v.is_number()) problems.push_back(key + ": expected a number, got " + std::string(v.type_name()));
        else out = v.get<double>();
    };
    auto read_int = [&](const nlohmann::json& v, const std::string& key, int& out) {
        if (!v.is_number_integer()) problems.push_back(key + ": expected an integer, got " + v.dump());
        else out = static_cast<int>(v.get<std::int64_t>());
    };

    for (const auto& [key, v] : doc.items()) {
        if (key == "initial_lr") read_real(v, key, cfg.initial_lr);
        else if (key == "momentum") read_real(v, key, cfg.momentum);
        else if (key == "batch_size") read_int(v, key, cfg.batch_size);
        else if (key == "weight_decay") read_real(v, key, cfg.weight_decay);
        else if (key == "max_epochs") read_int(v, key, cfg.max_epochs);
        else if (key == "plateau_patience") read_int(v, key, cfg.plateau_patience);
        else if (key == "lr_factor") read_real(v, key, cfg.lr_factor);
        else if (key == "dropout_rate") read_real(v, key, cfg.dropout_rate);
        else if (key == "global_seed") {
            if (!v.is_number_unsigned()) problems.push_back(key + ": expected a nonnegative integer, got " + v.dump());
            else cfg.global_seed = v.get<std::uint64_t>();
        } else if (key == "pad") read_int(v, key, cfg.pad);
        else if (key == "mirror_probability") read_real(v, key, cfg.mirror_probability);
        else {
            const auto hint = suggest_key(key);
            problems.push_back("unknown key '" + key + "'" + (hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
        }
    }
    // ranges only for keys that parsed
    for (auto& p : check_ranges(cfg)) {
        const auto key = p.substr(0, p.find(':'));
        const bool type_error = std::any_of(problems.begin(), problems.end(),
                                            [&](const std::string& q) { return q.rfind(key + ":", 0) == 0; });
        if (!type_error) problems.push_back(std::move(p));
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return cfg;
}

TrainConfig validate_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file " + path.string()});
    std::stringstream ss;
    ss << in.rdbuf();
    return validate_config(ss.str());
}

nlohmann::json to_json(const TrainConfig& c) {
    return nlohmann::json{{"initial_lr", c.initial_lr},
                          {"momentum", c.momentum},
                          {"batch_size", c.batch_size},
                          {"weight_decay", c.weight_decay},
                          {"max_epochs", c.max_epochs},
                          {"plateau_patience", c.plateau_patience},
                          {"lr_factor", c.lr_factor},
                          {"dropout_rate", c.dropout_rate},
                          {"global_seed", c.global_seed},
                          {"pad", c.pad},
                          {"mirror_probability", c.mirror_probability}};
}

}  // namespace fer
