#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fer {

/// Training protocol. Defaults are the benchmark protocol values.
struct TrainConfig {
    double initial_lr = 0.1;
    double momentum = 0.9;
    int batch_size = 128;
    double weight_decay = 0.0001;
    int max_epochs = 300;
    int plateau_patience = 10;
    double lr_factor = 0.5;
    double dropout_rate = 0.5;
    std::uint64_t global_seed = 0;
    int pad = 4;
    double mirror_probability = 0.5;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Every key accepted in a config file, in declaration order.
const std::vector<std::string>& config_keys();

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Parses a JSON object of TrainConfig fields. Missing keys keep their defaults; an
/// empty document means all defaults. Unknown keys, wrong types and out-of-range
/// values are collected and thrown together as one ConfigError.
TrainConfig validate_config(std::string_view text);
TrainConfig validate_config_file(const std::filesystem::path& path);

/// Range checks shared by the config file and command-line overrides.
std::vector<std::string> check_ranges(const TrainConfig& config);

nlohmann::json to_json(const TrainConfig& config);

/// Closest key by edit distance, or empty when nothing is reasonably close.
std::string suggest_key(std::string_view unknown);

}  // namespace fer
