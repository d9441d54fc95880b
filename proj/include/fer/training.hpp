#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fer/config.hpp"
#include "fer/network.hpp"
#include "fer/preprocess.hpp"
#include "fer/schedule.hpp"

namespace fer {

/// Preprocessed splits; every split keeps its samples' within-split indices.
struct PreparedData {
    std::vector<ProcessedSample> train;
    std::vector<ProcessedSample> validation;
    std::vector<ProcessedSample> test;
    std::string dataset_hash;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double validation_accuracy = 0.0;
    double lr = 0.0;  // rate in effect during the epoch

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainRun {
    TrainConfig config;
    std::string architecture;
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;  // earliest epoch with the highest validation accuracy
    bool diverged = false;
    std::vector<std::filesystem::path> checkpoints;
};

/// A trained model restored to its best validation epoch.
struct ModelRecord {
    std::string architecture;
    std::string variant = "standard";  // or "feature-comparison"
    double validation_accuracy = 0.0;  // single center view, at the best epoch
    Network model{nullptr};
};

struct TrainResult {
    TrainRun run;
    ModelRecord record;
};

struct TrainOptions {
    /// When set, a checkpoint `<dir>/epoch-NNN` is written at every new validation best.
    std::optional<std::filesystem::path> checkpoint_dir;
    std::function<void(const EpochRecord&)> on_epoch;
};

/// SGD with momentum; weight decay applies to conv/fc weights (tensors of rank >= 2)
/// and never to biases or batch-norm parameters. Frozen parameters are skipped.
std::unique_ptr<torch::optim::SGD> make_optimizer(
    const std::vector<std::pair<std::string, torch::Tensor>>& named_parameters, const TrainConfig& config);

/// Standard adaptations plus the config's dropout rate, applied to a catalog spec.
ArchitectureSpec training_spec(const ArchitectureSpec& spec, const TrainConfig& config);

/// Full protocol: instantiate from config.global_seed, then train_model.
TrainResult train(const ArchitectureSpec& spec, const PreparedData& data, const TrainConfig& config,
                  const TrainOptions& options = {});

/// Trains an already built network. Each epoch walks the training split in the
/// seed-derived epoch order with keyed augmentation, then measures single-view
/// validation accuracy. The returned model holds the best epoch's state. A
/// non-finite loss stops the run with `diverged` set and the trace so far kept.
TrainResult train_model(Network model, const PreparedData& data, const TrainConfig& config,
                        const TrainOptions& options = {});

inline const std::vector<double>& default_dropout_grid() {
    static const std::vector<double> grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    return grid;
}

struct GridSearchResult {
    double best_rate = 0.0;
    std::size_t best_index = 0;
    std::vector<double> rates;
    std::vector<TrainResult> runs;  // one per rate, grid order
};

using TrainFunction = std::function<TrainResult(const ArchitectureSpec&, const PreparedData&, const TrainConfig&)>;

/// One training run per rate with identical seed. Highest best-epoch validation
/// accuracy wins; ties go to the lower rate; diverged runs are never selected.
GridSearchResult grid_search_dropout(const ArchitectureSpec& spec, const PreparedData& data, const TrainConfig& config,
                                     std::span<const double> grid, const TrainFunction& trainer = {});

struct GridOutcome {
    double rate = 0.0;
    double validation_accuracy = 0.0;
    bool diverged = false;
};

/// Index of the winning grid outcome; throws when every run diverged.
std::size_t select_dropout(std::span<const GridOutcome> outcomes);

struct FeatureComparisonResult {
    TrainResult result;
    std::string frontend_hash_before;
    std::string frontend_hash_after;
    std::size_t boundary = 0;
};

/// Backend used to compare frontends: FC(1024), BatchNorm, Dropout, Classifier(7).
std::vector<LayerSpec> comparison_backend(double dropout_rate);

/// Keeps the trained frontend (layers before backend_boundary) frozen, replaces the
/// backend with comparison_backend, and retrains under the standard protocol.
FeatureComparisonResult feature_comparison(const Network& trained, const PreparedData& data, const TrainConfig& config,
                                           const TrainOptions& options = {});

}  // namespace fer
